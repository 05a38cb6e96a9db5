use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters or configuration violate one or more constraints.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// A table or enumeration would exceed the configured resource cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An identifier was out of range.
    #[error("index out of range: {0}")]
    Index(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
