use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate news id {0:?}")]
    DuplicateId(String),

    #[error("unknown news id(s): {}", .0.join(", "))]
    UnknownIds(Vec<String>),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("no vocabulary term survives tokenization")]
    EmptyVocabulary,

    #[error("training targets have zero interquartile range; supply explicit relevance control points")]
    ZeroIqr,

    #[error("insufficient rare cases: found {found}, need at least {needed}")]
    InsufficientRare { found: usize, needed: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("degenerate target: all training targets are equal")]
    DegenerateTarget,

    #[error("feature schema mismatch (missing: [{}], extra: [{}])", .missing.join(", "), .extra.join(", "))]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("item {0:?} has no known tweet count")]
    UnknownTarget(String),

    #[error("empty news pool")]
    EmptyPool,

    #[error("rankings cover different ids (symmetric difference: {})", .0.join(", "))]
    IdSetMismatch(Vec<String>),

    #[error("window does not fit: need at least {required} cases, have {available}")]
    WindowTooLarge { required: usize, available: usize },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),
}
