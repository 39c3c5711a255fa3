//! Library half of the `czpulse` command line tool: configuration parsing
//! and the command implementations, kept here so integration tests can
//! drive them directly.

pub mod commands;
pub mod config;

pub use config::RunConfig;

/// CLI failure classes map onto exit codes: validation → 1, numerical → 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<czpulse_core::Error> for CliError {
    fn from(e: czpulse_core::Error) -> Self {
        match e {
            czpulse_core::Error::InvalidConfig { .. } => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o failure: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
