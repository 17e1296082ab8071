use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed arguments: wrong shapes, asymmetric input, bad indices.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A point or parameter lies outside the region where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A linear solve, eigensolve or branch computation broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The requested work exceeds a configured budget.
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    /// An integrand returned NaN or infinity.
    #[error("non-finite integrand value at sample {index}")]
    NonFinite { index: u64 },
    /// A rejection sampler accepted too few proposals.
    #[error("sampler failure: acceptance rate {rate:.3e} is below {min:.1e}")]
    Sampler { rate: f64, min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
