//! Cell-sequence preprocessing, Markov-mixture fitting, state aggregation
//! and synthetic sequence generation.

mod em;
mod fss;
mod model;
mod sequence;
mod synth;

pub use em::{
    bic, em_fit, parameter_count, responsibilities, select_k, EmConfig, FitReport, KSelection, MIN_BETA,
    MIN_GAMMA,
};
pub use fss::{forward_state_selection, FssConfig, FssPath, FssResult};
pub use model::{MarkovMixtureModel, StateAggregation, LOAD_SUM_TOLERANCE, ROW_SUM_TOLERANCE};
pub use sequence::{
    device_cell_sequences, preprocess, rank_encode, run_compress, CellSequence, PreprocessOptions,
    Preprocessed,
};
pub use synth::{synthesize, synthesize_ranks, LengthDist, Synthetic};
