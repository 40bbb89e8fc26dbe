use thiserror::Error;

/// Errors raised by constructions, spectral routines and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested size does not fit the configured limits.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A randomized construction ran out of retries.
    #[error("construction failed after {retries} attempts: {reason} (best value seen {best:.6e})")]
    ConstructionFailure {
        retries: u32,
        best: f64,
        reason: String,
    },

    /// A numerical invariant that must hold up to roundoff was violated.
    #[error("numerical invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn capacity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capacity(msg.into()))
}
