use thiserror::Error;

use crate::quantizer::Grid;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("quantizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<Grid>,
    },

    #[error("invalid correlation structure: {0}")]
    InvalidCorrelation(String),

    #[error("covariance at step {step} is not positive semidefinite")]
    NotPositiveSemidefinite { step: usize },

    #[error("infeasible volume constraints: {0}")]
    Infeasible(String),

    #[error("missing transition data: {0}")]
    MissingTransition(String),

    #[error("parse error at line {line} ({section}): {message}")]
    Parse {
        line: usize,
        section: String,
        message: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
