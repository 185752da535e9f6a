use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value fell outside the domain of a function (e.g. a negative intensity).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error for `{key}`: {reason}")]
    Usage { key: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn usage(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Usage {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
