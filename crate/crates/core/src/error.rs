use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed record or binary block. `line` is 1-based for
    /// line-delimited files and 0 for binary model files.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("duplicate document id {doc_id:?} at line {line}")]
    DuplicateId { doc_id: String, line: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unsupported model format version {0}")]
    Version(u8),

    #[error("occurrence references unknown document {0:?}")]
    UnknownDoc(String),

    #[error("no token survives min_count={min_count}")]
    EmptyVocab { min_count: u32 },

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("training produced a non-finite parameter in epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("text contains no in-vocabulary tokens")]
    NoKnownTokens,

    #[error("cosine similarity of a zero vector")]
    ZeroVector,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("record for {0:?} has no contexts to rank")]
    EmptyRecord(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("query acronym {query:?} does not match record acronym {record:?}")]
    AcronymMismatch { query: String, record: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
