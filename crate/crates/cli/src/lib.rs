//! Experiment orchestration behind the `qkernel` binary.

pub mod config;
pub mod dataset;
pub mod error;
pub mod kernels;
pub mod sweep;
pub mod tables;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
