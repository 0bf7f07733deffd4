use thiserror::Error;

/// Errors raised by the numerical routines and the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("{0}")]
    Domain(String),

    /// Adaptive refinement did not reach the requested tolerance.
    #[error("quadrature did not converge (residual estimate {residual:e})")]
    NoConvergence { residual: f64 },

    /// The weak-source approximation does not hold.
    #[error("photons per temporal mode epsilon = {epsilon:e} is not below 0.1; increase the temporal mode count M")]
    WeakSourceRegime { epsilon: f64 },

    /// The input sits on a singular point of a closed-form map.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A Monte Carlo sample carried no photons.
    #[error("uninformative sample: all mode counts are zero")]
    UninformativeSample,

    /// Self-consistency check of an internal computation failed.
    #[error("internal consistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
