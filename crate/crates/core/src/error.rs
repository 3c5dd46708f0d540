use alloc::string::String;
use core::fmt;

/// Errors produced by the monitoring core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidInput(String),
    /// A matrix handed to the Cholesky factorization had a nonpositive pivot.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// An operation was attempted in a state that does not allow it.
    State(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NotPositiveDefinite { pivot, value } => {
                write!(f, "matrix is not positive definite (pivot {pivot} = {value})")
            }
            Error::State(msg) => write!(f, "invalid state: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
