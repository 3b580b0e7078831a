use std::path::PathBuf;

use thiserror::Error;

use crate::sa::SaModel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(
        "segment `{id}`: feature dimension {found} does not match archive dimension {expected}"
    )]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("segment `{id}` has {frames} frames, limit is {max_frames}")]
    OverLength {
        id: String,
        frames: usize,
        max_frames: usize,
    },

    #[error("invalid segment `{id}`: {reason}")]
    InvalidSegment { id: String, reason: String },

    #[error("invalid synthesis config: {0}")]
    ConfigInvalid(String),

    #[error("invalid experiment config: {0}")]
    ExperimentConfig(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in `{0}`")]
    NonFiniteGradient(String),

    #[error("archive is empty")]
    EmptyArchive,

    #[error("training diverged at batch {batch} (loss {loss})")]
    NonFiniteLoss {
        batch: usize,
        loss: f64,
        /// Parameters after the last batch that finished with a finite loss.
        last_finite: Box<SaModel>,
        curve: Vec<(usize, f64)>,
    },

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("relevant set is empty")]
    EmptyRelevant,

    #[error("query word `{0}` has no relevant entry in the index")]
    QueryWithoutRelevant(String),

    #[error("no embedding for segment `{0}`")]
    MissingEmbedding(String),

    #[error("word `{0}` does not occur in the archive")]
    UnknownWord(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
