//! Evaluation protocols, grid search over `k`, and reports.

mod dataset;
mod grid;
mod protocol;
mod report;
mod run;

pub use dataset::{build_dataset, sequence_parts, Dataset, Resampling, Sample};
pub use grid::{grid_search_k, AuditedSource, DistanceSource, GridSearch, GridTensor};
pub use protocol::{Fold, Protocol};
pub use report::{EvalReport, PredictionRecord, Timings};
pub use run::{
    compute_tensors, evaluate, load_split, protocol_from_config, run_protocol, run_protocol_on,
    run_protocol_with, train_on, train_pipeline, Evaluation,
};
