use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("word '{0}' is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("no training bills for {0}")]
    EmptyCell(String),

    #[error("insufficient history: first feasible test congress is {0}")]
    InsufficientHistory(u32),

    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    SchemaMismatch { missing: Vec<String>, extra: Vec<String> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Config(_)
                | Error::Format { .. }
                | Error::OutOfVocabulary(_)
                | Error::SchemaMismatch { .. }
                | Error::InsufficientHistory(_)
        )
    }
}
