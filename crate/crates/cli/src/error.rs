use std::fmt;

use dqd_tomo::TomoError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration (exit 2).
    Config(String),
    /// Singular matrices, failed checks, non-convergence (exit 3).
    Numerical(String),
    /// Output could not be written (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<TomoError> for CliError {
    fn from(e: TomoError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Maps a library error raised while validating user input.
pub fn config_err(e: TomoError) -> CliError {
    CliError::Config(e.to_string())
}
