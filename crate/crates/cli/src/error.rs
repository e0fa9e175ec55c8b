use std::fmt;

use stattest_core::Error as CoreError;

/// Stable process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const NOT_SQ: u8 = 2;
    pub const GUARD: u8 = 3;
    pub const CAP: u8 = 4;
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or unwritable files, malformed JSON, invalid input.
    Io(String),
    /// A configured or built-in enumeration limit was exceeded.
    Guard(String),
    /// A solver failed or an internal consistency check did not hold.
    Failure(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Failure(_) => exit::IO,
            CliError::Guard(_) => exit::GUARD,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::Guard(m) => write!(f, "guard exceeded: {m}"),
            CliError::Failure(m) => write!(f, "failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::GuardExceeded { .. } => CliError::Guard(e.to_string()),
            CoreError::MaxIter { .. } => CliError::Failure(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}
