//! CLI error type and its exit-code mapping: 2 for configuration problems,
//! 3 for numerical aborts, 4 for resource guards.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config { field: String, message: String },
    Io(std::io::Error),
    Core(spde_core::Error),
    /// A verification subcommand found an identity violated.
    CheckFailed { what: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => {
                write!(f, "config error: `{field}`: {message}")
            }
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::CheckFailed { what } => write!(f, "check failed: {what}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<spde_core::Error> for CliError {
    fn from(e: spde_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::CheckFailed { .. } => 3,
            CliError::Core(e) => match e {
                spde_core::Error::InvalidConfig { .. }
                | spde_core::Error::GuardViolation { .. } => 2,
                spde_core::Error::ResourceGuard { .. } => 4,
                _ => 3,
            },
        }
    }
}
