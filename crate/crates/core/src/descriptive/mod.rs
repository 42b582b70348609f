//! Descriptive traffic, mobility and device-population statistics.

mod ecdf;
mod stats;

pub use ecdf::Ecdf;
pub use stats::{
    cells_visited, cm_age, concentration, feature_penetration, hhi, ud_log_ratio, vendor_hhi,
    CmAgeReport, ConcentrationCurve, ConcentrationWeight, Penetration, UdRatios,
};
