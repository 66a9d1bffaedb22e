use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "vocabulary is empty after pruning (min_df={min_df}, max_df_ratio={max_df_ratio}, max_size={max_size})"
    )]
    EmptyVocabulary {
        min_df: u64,
        max_df_ratio: f64,
        max_size: usize,
    },

    #[error("time slice {label} contains no documents")]
    EmptySlice { label: String },

    #[error("document {doc_id} is empty; filter empty documents before training")]
    EmptyDocument { doc_id: String },

    #[error("vocabulary checksum mismatch: model has {expected}, input has {found}")]
    VocabularyMismatch { expected: String, found: String },

    #[error("negative excluded count ({what}); count bookkeeping is broken")]
    NegativeCount { what: &'static str },

    #[error("theta for document {doc_id} is not a simplex vector (sum={sum})")]
    NonSimplexTheta { doc_id: String, sum: f64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("zero probability for word {word} in document {doc_id}")]
    ZeroProbability { doc_id: String, word: usize },

    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
