//! Experiment runner for `skinlab-core`: JSON configs, CSV/JSON datasets
//! with provenance headers, and thread-parallel trajectory ensembles.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod formats;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, ModelSpec};
pub use error::{RunError, RunResult};
pub use runner::{run_experiment, Manifest, RunOptions};
