use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument is outside its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The operation is not defined for the given model or shape.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A numerical quantity is undefined (divergent series, singular normalizer).
    #[error("numerical domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
