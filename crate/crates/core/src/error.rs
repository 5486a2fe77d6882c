use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Error, Debug)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request exceeds a configured resource limit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An input failed validation (e.g. a matrix that is not unitary).
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),

    /// A computation produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Importance weights collapsed onto too few samples.
    #[error("degenerate reweighting: effective sample size {ess:.3} below {min}")]
    DegenerateWeights { ess: f64, min: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
