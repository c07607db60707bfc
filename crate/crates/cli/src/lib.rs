//! Experiment runner for product towers: reads a TOML configuration, runs
//! the selected stages and returns a report plus the files to write.

pub mod app;
pub mod config;
pub mod error;
pub mod lemmas;
pub mod pipeline;
pub mod svg;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use pipeline::{run, Artifacts, ExperimentReport, Stages};
