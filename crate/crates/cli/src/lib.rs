//! Seeded experiment runner for the synthetic and LQR benchmarks.

pub mod config;
pub mod error;
pub mod export;
pub mod runner;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use export::{curves, export_curves, read_rows, CurveRow};
pub use runner::{run_experiment, write_outputs, ExperimentResult, ResultRow, SummaryRow};
