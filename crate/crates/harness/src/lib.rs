//! Reproducible experiment runner for the movable-antenna toolkit.
//!
//! An experiment is described by a TOML file (see [`config`]); [`runner`]
//! validates it, executes it on a sized worker pool and writes CSV tables
//! plus a `summary.json` into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod runner;

pub use config::{ExperimentConfig, Overrides, Violation};
pub use error::{ConfigError, RunError};
pub use runner::{run_experiment, validate_config, RunOptions, RunReport, OUTPUT_DIR_ENV};
