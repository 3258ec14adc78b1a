use std::path::PathBuf;

use thiserror::Error;

use crate::model::PatternKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pattern kind {pattern:?} does not match transaction kind {transaction:?}")]
    KindMismatch {
        pattern: PatternKind,
        transaction: PatternKind,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("model has not been trained")]
    Untrained,

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("mixed feature representations in one point set")]
    MixedRepresentation,

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("cannot rate pattern {0}: it is not supported by any transaction")]
    Unsupported(usize),

    #[error("rating {rating} for pattern {pattern_id} is outside 1..={classes}")]
    RatingOutOfRange {
        pattern_id: usize,
        rating: u32,
        classes: u32,
    },

    #[error(
        "ratings do not match the pending request: missing {missing:?}, unexpected {unexpected:?}"
    )]
    RatingSetMismatch {
        missing: Vec<usize>,
        unexpected: Vec<usize>,
    },

    #[error("session is {0}, operation not allowed")]
    InvalidState(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}
