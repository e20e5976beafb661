use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An exponent or dimension lies outside the admissible regime.
    #[error("regime violation: {0}")]
    Regime(String),

    /// Malformed input data (shapes, signs, empty sets).
    #[error("invalid input: {0}")]
    Validation(String),

    /// A verifier or solver was asked to run without a required setting.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("iteration diverged at step {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error at {pointer}: {message}")]
    Parse { pointer: String, message: String },
}

impl Error {
    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
