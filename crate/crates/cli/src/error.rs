use std::fmt;
use std::process::ExitCode;

use geoind_core::Error as CoreError;
use geoind_lbs::LbsError;

/// Failure of a subcommand, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or an infeasible request (exit 2).
    Domain(String),
    /// Files, network, malformed input data (exit 1).
    Io(String),
}

impl CliError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Domain(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(_) | CoreError::Parse(_) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<LbsError> for CliError {
    fn from(e: LbsError) -> Self {
        match e {
            LbsError::Core(core) => core.into(),
            LbsError::InvalidQuery(_) => CliError::Domain(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
