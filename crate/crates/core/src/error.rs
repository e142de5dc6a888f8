use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate at index {0}")]
    NonFiniteCoordinate(usize),
    #[error("empty point set")]
    EmptySet,
    #[error("size mismatch (|a|={a}, |b|={b})")]
    SizeMismatch { a: usize, b: usize },
    #[error("instance too large for the exact solver (s={size}, limit {limit})")]
    InstanceTooLarge { size: usize, limit: usize },
    #[error("auction exhausted its time budget without producing an assignment")]
    BudgetExhaustedWithoutAssignment,
    #[error("k={k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("point {index} lies outside the grid")]
    PointOutsideGrid { index: usize },
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("grids differ in dims, origin or cell size")]
    GridMismatch,
    #[error("grid holds non-binary value {value} at cell {index}")]
    NonBinaryGrid { index: usize, value: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("grid body holds {found} values, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown shape family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("loss diverged at step {step} (loss {loss}, initial {initial})")]
    DivergenceDetected { step: usize, loss: f64, initial: f64 },
    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("candidate {index}: {source}")]
    Candidate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse { line, reason: reason.into() }
    }

    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
