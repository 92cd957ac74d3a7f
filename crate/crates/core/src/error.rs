use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The crossing curve `(lambda, p_hat)` is attached for diagnostics.
    #[error("bracketing failed: {msg}")]
    Bracketing { msg: String, curve: Vec<(f64, f64)> },
    #[error("unsupported dimension d={0}")]
    UnsupportedDimension(usize),
    #[error("model assumption violated: {0}")]
    Assumption(String),
}

impl Error {
    /// Validation problems (bad input) as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Argument(_) | Error::UnsupportedDimension(_) | Error::Assumption(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
