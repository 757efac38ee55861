//! Monte Carlo experiments, statistics, fits and result output.

pub mod experiment;
pub mod fit;
pub mod plot;
pub mod stats;
pub mod training;

pub use experiment::{
    decode_batch, resolve_local, run_experiment, run_point, syndrome_density, write_csv, write_manifest, ExperimentConfig, ExperimentResult, ExperimentRow, LocalChoice, Rate,
    CSV_HEADER, CSV_SCHEMA_VERSION,
};
pub use fit::{eval_polynomial, fit_polynomial, FitPoint, PolyFit};
pub use stats::{wilson, Z95};
pub use training::{TrainJob, TrainSummary};
