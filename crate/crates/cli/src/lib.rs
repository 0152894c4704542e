//! Config-driven verification of projectively flat general (α,β)-metrics.
//!
//! The `projflat` binary reads a JSON bundle definition, runs the checks in
//! [`verify`], and writes a JSON report. Geodesic traces and point evaluations of `φ`
//! are available through [`commands`].

// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;
pub mod verify;

pub use config::{BundleConfig, ConfigError};
pub use report::{Record, Report};
pub use verify::{verify, VerifyOptions};

/// Errors that end a command with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<projflat_core::Error> for CliError {
    fn from(e: projflat_core::Error) -> Self {
        CliError::Config(ConfigError::Core(e))
    }
}

/// Exit code for success.
pub const EXIT_PASS: u8 = 0;
/// Exit code when a verification record fails or a trace stops early.
pub const EXIT_FAIL: u8 = 1;
/// Exit code for usage and config errors.
pub const EXIT_USAGE: u8 = 2;
