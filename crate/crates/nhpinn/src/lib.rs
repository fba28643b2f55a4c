//! Experiment runner for neural homogenization PINNs.
//!
//! Wraps the `nhpinn-core` numerics with JSON configs, a content-addressed
//! artifact cache, checkpoint and model files, reports and the `nhpinn` CLI.

pub mod cache;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiment;
mod fsutil;
pub mod grid_file;
pub mod model_file;
pub mod problems;
pub mod report;
pub mod seeds;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use experiment::{run_baseline, run_experiment, run_reference, run_transfer, RunEnv};
pub use report::{collect_report, emit_report, read_report, ErrorReport};
