use thiserror::Error;

/// Errors raised by the stationarity toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("guard exceeded: {what} = {value} exceeds limit {limit}")]
    GuardExceeded {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("{solver} did not converge within {iterations} iterations")]
    MaxIter { solver: &'static str, iterations: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
