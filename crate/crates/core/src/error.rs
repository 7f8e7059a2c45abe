use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed stream or file content. `index` is 1-based (stream vector or line).
    #[error("format error at {index}: {message}")]
    Format { index: usize, message: String },

    /// A column of a data batch has zero sample variance. `column` is 0-based.
    #[error("column {column} has zero sample variance")]
    DegenerateColumn { column: usize },

    /// A summary sample arrived out of order.
    #[error("expected batch {expected}, got batch {got}")]
    Sequencing { expected: usize, got: usize },

    /// Covariance construction or factorization failed.
    #[error("construction error: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
