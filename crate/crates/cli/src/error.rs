use std::fmt;
use std::process::ExitCode;

use levy_ito::Error;

/// Failure of a run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration or validation failure: exit 1.
    Config(String),
    /// Numerical failure (stability, divergence, quadrature): exit 2.
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Numerical(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InfiniteIntensity { .. }
            | Error::NotFiniteVariation { .. }
            | Error::SpotOutOfRange { .. }
            | Error::TimeOutOfRange { .. }
            | Error::DomainViolation { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("I/O: {e}"))
    }
}
