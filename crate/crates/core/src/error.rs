use std::path::PathBuf;

/// Errors raised by the library and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside [0,1]^d: {0}")]
    Domain(String),

    #[error("duplicate point: index {index} lies within {tol:e} of index {other}")]
    DuplicatePoint { index: usize, other: usize, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("candidates exhausted after {selected} selections (all remaining power values below {floor:e})")]
    ExhaustedCandidates { selected: usize, floor: f64 },

    #[error("tail budget {budget:e} unreachable: full rank leaves relative mass {achieved:e}")]
    TailBudgetUnreachable { budget: f64, achieved: f64 },

    #[error("design point {index} is not on the path grid (distance {distance:e})")]
    DesignNotOnGrid { index: usize, distance: f64 },

    #[error("nonsummable tail: {0}")]
    NonsummableTail(String),

    #[error("hypothesis violated at j = {index}: {what}")]
    HypothesisViolation { what: String, index: usize },

    #[error("truncation tolerance {tol:e} unreachable within {cap} terms")]
    TruncationUnreachable { tol: f64, cap: usize },

    #[error("J_max = {jmax} too small: relative tail mass {tail:e} exceeds {tol:e}")]
    JmaxTooSmall { jmax: usize, tail: f64, tol: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty schedule: {0}")]
    EmptySchedule(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptySchedule(_) | Error::InvalidParameter(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 1,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
