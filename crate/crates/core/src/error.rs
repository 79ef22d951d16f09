use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("oracle protocol error: {0}")]
    Protocol(String),

    #[error("composition failed: {0}")]
    CompositionFailed(String),

    #[error("no usable facts: {0}")]
    NoUsableFacts(String),

    #[error("knowledge base is empty")]
    EmptyKb,

    #[error("duplicate kb_id `{0}`")]
    DuplicateKbId(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("augment shortfall: {0}")]
    Shortfall(String),

    #[error("index cache: {0}")]
    Cache(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the model backend rather than by the inputs.
    pub fn is_oracle_failure(&self) -> bool {
        matches!(self, Error::OracleUnavailable(_) | Error::Protocol(_))
    }
}
