use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition was not met by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A least-squares or LSTD system has no unique solution.
    #[error("singular system: {0}")]
    Singular(String),

    /// `I - gamma F^T` is singular or too badly conditioned to define a
    /// planning fixed point.
    #[error("ill-posed planning problem (condition estimate {condition:e})")]
    IllPosed { condition: f64 },

    /// The parameter vector became non-finite or exceeded the norm guard.
    #[error("parameter vector diverged after {step} updates")]
    Diverged { step: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
