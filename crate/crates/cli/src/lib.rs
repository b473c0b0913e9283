//! Batch front end for the quantum-sensor localization library.
//!
//! The binary wires the core crate's simulator into reproducible, file-driven
//! experiments:
//!
//! - [`config`]: the JSON experiment config (strict schema, dotted `--set`
//!   overrides, resolution to a core `ExperimentConfig`).
//! - [`format`]: result serialization (9-significant-digit floats, CSV and
//!   JSON emitters).
//! - [`artifacts`]: fingerprinted cache of built measurements and trained
//!   models, so sweeps and repeated runs reuse expensive artifacts.
//! - [`runner`]: the subcommand implementations (`gen-data`, `build-pgm`,
//!   `train`, `eval`, `sweep`) with rayon-parallel evaluation whose output
//!   is byte-identical to the serial path.
//! - [`inspect`]: invariant validation of persisted measurements and models.
//!
//! Everything the commands write is deterministic for a fixed config and
//! seed, except the manifest's wall-time field (recorded nowhere else).

pub mod artifacts;
pub mod config;
pub mod format;
pub mod inspect;
pub mod runner;

use qloc_core::harness::HarnessError;

/// Top-level command error, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation, config, or persisted input: exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Failure while running a valid experiment: exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// The process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(err: HarnessError) -> Self {
        match err {
            HarnessError::InvalidConfig(_) => CliError::Validation(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

/// Stderr logger honoring `--quiet`/`--verbose`.
#[derive(Debug, Clone, Copy)]
pub struct Logger {
    /// -1 quiet, 0 normal, 1 verbose.
    pub level: i8,
}

impl Logger {
    /// Builds a logger from the two flags.
    pub fn new(quiet: bool, verbose: bool) -> Self {
        Logger { level: if quiet { -1 } else if verbose { 1 } else { 0 } }
    }

    /// Printed unless `--quiet`.
    pub fn info(&self, msg: impl AsRef<str>) {
        if self.level >= 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Printed only with `--verbose`.
    pub fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= 1 {
            eprintln!("{}", msg.as_ref());
        }
    }
}
