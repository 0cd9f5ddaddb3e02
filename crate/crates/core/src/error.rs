use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular matrix of size {n}: {evidence}")]
    SingularMatrix { n: usize, evidence: String },

    #[error("local problem of subdomain {subdomain} is singular: {source}")]
    SingularSubdomain {
        subdomain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration breakdown at step {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("factorization backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
