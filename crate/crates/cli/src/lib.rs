//! Experiment runner: configuration, artifact writing and verification.

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Kind, SCHEMA};
pub use manifest::{verify, RunManifest, VerifyError};
pub use run::{run, RunError, RunOutcome, RunStatus};
