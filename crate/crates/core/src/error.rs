use thiserror::Error;

/// Errors produced anywhere in the retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown entity: {0}")]
    UnknownEntity(String),

    #[error("entity {0} is excluded from exploration")]
    ExcludedSeed(String),

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cannot score a zero vector")]
    ZeroVector,

    #[error("no similarity entry for ({0:?}, {1:?})")]
    MissingSimilarity(String, String),

    /// Transport-level or server-side failure; safe to retry.
    #[error("gateway error (retryable): {0}")]
    Retryable(String),

    /// Rejected request (4xx-class); never retried.
    #[error("gateway error: {0}")]
    Rejected(String),

    #[error("authentication failed: {0}")]
    Auth(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Retryable(_))
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
