//! Dataset ingestion, accuracy metrics, reports and experiment runs.

pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod report;

pub use dataset::{load_glas_dataset, DatasetEntry, Grade, Split};
pub use experiment::{evaluate, load_split, run_experiment, table_variants, ExperimentResult, TestItem};
pub use metrics::{patch_accuracy, pixel_accuracy};
pub use report::{EvalReport, EvalRow, Summary};
