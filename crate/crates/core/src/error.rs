use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{malformed} of {total} records in {path} are malformed (more than 10%)")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown article id: {0}")]
    UnknownArticle(String),

    #[error("no candidate comments: the retrieved articles have no comments")]
    NoCandidates,

    #[error("training data has a single class (all labels are {0})")]
    SingleClass(u8),

    #[error("no training pair has a non-empty target")]
    EmptyTargets,

    #[error("non-finite value produced by `{op}`")]
    NonFinite { op: &'static str },

    #[error("backward already ran on this graph; reset it first")]
    BackwardTwice,

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("hypotheses reference article ids absent from the references: {0:?}")]
    IdMismatch(Vec<String>),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
