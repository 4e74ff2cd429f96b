use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate channel for relation {relation}: both hypotheses have zero probability")]
    DegenerateChannel { relation: usize },

    #[error("empty bag")]
    EmptyBag,

    #[error("token {token} outside vocabulary of size {vocab}")]
    OutOfVocabulary { token: usize, vocab: usize },

    #[error("non-finite loss on bag {bag} at iteration {iter}")]
    NonFinite { bag: String, iter: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}:{line}: malformed record: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bag {bag}: {msg}")]
    Validation { bag: String, msg: String },

    #[error("catalog hash mismatch: expected {expected}, found {found}")]
    CatalogMismatch { expected: String, found: String },

    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NonFinite { .. } | Error::DegenerateChannel { .. } => 3,
            Error::CatalogMismatch { .. } | Error::ShapeMismatch(_) => 4,
            _ => 2,
        }
    }
}
