use thiserror::Error;

/// Errors produced by the detector toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketing solver ran out of iterations (or could not shrink its
    /// bracket further) before meeting its tolerance.
    #[error("solver failed after {iterations} iterations, last bracket [{lo}, {hi}]")]
    SolverFailure { lo: f64, hi: f64, iterations: usize },

    /// A run configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
