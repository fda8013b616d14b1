use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("utterance {index} ({id:?}) has no reference topic_change flag")]
    IncompleteReference { index: usize, id: String },

    #[error("{0}")]
    Validation(String),

    #[error("bundle format: {0}")]
    Format(String),

    #[error("utterance {id:?}: expected width {expected}, found {found}")]
    Dimension {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("utterance {0:?}: non-finite embedding value")]
    NonFinite(String),

    #[error("embedding bundle has no entry for eligible utterance {0:?}")]
    Alignment(String),

    #[error("cosine similarity undefined for an all-zero vector")]
    DegenerateVector,

    #[error("need at least 2 eligible utterances to build a similarity profile, found {0}")]
    TooShort(usize),

    #[error("window undefined: reference has no boundaries, supply k explicitly")]
    UndefinedWindow,

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
