use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An index (multipole, order) is outside the supported range.
    #[error("range error: {0}")]
    Range(String),
    /// A quadrature or series failed its internal error estimate.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// A series needed more terms than the accuracy policy allows.
    #[error("term budget exhausted: {0}")]
    Budget(String),
    /// A computed quantity violated an invariant it must satisfy by construction.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// Linear algebra produced something that cannot come from a valid covariance.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A regression did not describe the data it was fitted to.
    #[error("fit error: {0}")]
    Fit(String),
    /// Malformed configuration or serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
