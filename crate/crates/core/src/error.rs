use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid vote {value} at row {row}, column {col} (expected -1, 0 or 1)")]
    InvalidVote { row: usize, col: usize, value: i64 },

    #[error("invalid label {value} at index {index}")]
    InvalidLabel { index: usize, value: i64 },

    #[error("class argument must be -1 or +1, got {0}")]
    NotAClass(i8),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("marginal probability underflowed to zero")]
    DegenerateMarginal,

    #[error("no index where both the labeling function and the reference vote")]
    EmptyOverlap,

    #[error("objective became non-finite at epoch {epoch}")]
    NonFiniteObjective { epoch: usize },

    #[error("gradient became non-finite at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },

    #[error("dataset too small: {n} rows, need at least {min}")]
    TooSmall { n: usize, min: usize },

    #[error("requested {requested} rows but only {available} are available")]
    NotEnoughRows { requested: usize, available: usize },

    #[error("ground-truth labels are required for {0}")]
    MissingTruth(&'static str),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: line {line} has {found} fields, header has {expected}")]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical procedure rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMarginal
                | Error::NonFiniteObjective { .. }
                | Error::NonFiniteGradient { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
