//! Benchmark harness for the `fda-hybrid` estimators: Monte-Carlo MSE
//! studies, ridge-parameter sweeps, split-sample prediction error on
//! observed data, CSV ingestion and result emission.

pub mod config;
pub mod emit;
pub mod error;
pub mod ingest;
pub mod predict;
pub mod study;
pub mod sweep;
pub mod tuning;

pub use config::{ExperimentConfig, LayoutKind, OutputFormat, SelectionMode, TuningConfig};
pub use error::{BenchError, Result};
pub use ingest::{ingest_csv, Layout};
pub use predict::{run_split_prediction, PredictionTable};
pub use study::{run_mc_study, MseRow, MseTable, StudyOutput};
pub use sweep::{run_rho_sweep, SweepTable};
