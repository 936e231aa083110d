use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested operation does not apply to this scenario (for example
    /// a perturbative formula applied to a delta switching).
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    /// The scenario is outside the validity of the perturbative expansion.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions: estimate {estimate:e}, error bound {error_bound:e}")]
    Convergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("invalid qubit state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::InvalidRegime(msg.into())
    }
}
