//! Prediction-record ingestion, experiment orchestration and report
//! emission on top of `vacuity-core`.

pub mod config;
pub mod error;
pub mod records;
pub mod report;
pub mod svg;

mod commands;

pub use commands::{run, Cli, Command};
pub use error::{CliError, Result};
