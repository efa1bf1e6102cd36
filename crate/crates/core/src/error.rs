use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the extraction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("document contains no recoverable element")]
    EmptyDocument,
    #[error("node {0} does not exist in the tree")]
    UnknownNode(usize),
    #[error("malformed xpath {input:?}: {reason}")]
    MalformedXPath { input: String, reason: String },
    #[error("invalid chunk parameters: max_tokens={max_tokens}, stride={stride}")]
    InvalidChunkParams { max_tokens: usize, stride: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training loss is not finite ({0})")]
    NonFiniteLoss(f64),
    #[error("duplicate prediction for page {page_id} at {xpath}")]
    DuplicatePrediction { page_id: String, xpath: String },
    #[error("expected {expected} metric rows, got {got}")]
    WrongRowCount { expected: usize, got: usize },
    #[error("gold xpath {xpath} does not resolve in page {page_id}")]
    DanglingGoldXPath { page_id: String, xpath: String },
    #[error("malformed manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error("unknown attribute label {0:?}")]
    UnknownLabel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io failure on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to environment or numeric failures.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::NonFiniteLoss(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
