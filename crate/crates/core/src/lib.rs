//! Analysis toolkit for enterprise IoT cellular telemetry.
//!
//! The crate works on hourly per-device, per-cell data detail records (DDRs)
//! and provides:
//!
//! * [`data`]: the record model, CSV ingest, IoT and industry filters, aggregation;
//! * [`descriptive`]: ECDFs, uplink/downlink ratios, cell concentration, module age,
//!   feature penetration and vendor concentration;
//! * [`temporal`]: periodogram peaks, daily profiles, Haar DWT, bisecting k-means
//!   and a Ward-linkage cross-check;
//! * [`mobility`]: cell-sequence preprocessing, mixtures of first-order Markov
//!   chains fit by EM, BIC model selection, state aggregation and synthesis;
//! * [`predictability`]: Lempel-Ziv entropy rate and the Fano predictability bound;
//! * [`forecast`]: additive trend/seasonality/holiday forecasting with rolling backtests;
//! * [`fixtures`]: seeded synthetic populations used by tests and the CLI.

pub mod data;
pub mod descriptive;
pub mod error;
pub mod fixtures;
pub mod forecast;
pub mod mobility;
pub mod predictability;
pub mod temporal;

pub use error::{Error, ErrorClass, Result};

/// Version of the JSON model formats written by this crate.
pub const MODEL_FORMAT_VERSION: u32 = 1;
