//! Entropy-rate estimation of cell sequences and the predictability bound
//! that follows from Fano's inequality.

mod fano;
mod lz;
mod report;

pub use fano::{fano_bound, fano_residual, FANO_TOLERANCE};
pub use lz::{lz_entropy, match_lengths, EntropyEstimate, DEFAULT_MIN_LEN};
pub use report::{
    predictability_report, sequence_predictability, PredictabilityOptions, PredictabilityReport, PredictabilityResult,
};
