//! CLI error type with the exit-code contract.

use std::fmt;

/// Errors surfaced by the pipeline stages, partitioned by exit code:
/// configuration/usage problems exit 1, an infeasible verification exits 2,
/// and I/O failures exit 3.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid configuration or usage (exit 1).
    Config(String),
    /// Verification hit a region with an infinite bound (exit 2). The tube
    /// artifact with the failing step/region has already been written.
    Infeasible { bound: String, step: u32, region: usize },
    /// File-system or serialization failure (exit 3).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Infeasible { .. } => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Infeasible { bound, step, region } => write!(
                f,
                "verification infeasible for bound '{bound}': infinite bound in region {region} at step {step}"
            ),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<conreach_core::Error> for CliError {
    fn from(e: conreach_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
