use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by dataset construction, geometry, dynamics and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("non-numeric feature cell at row {row}, column `{column}`: {value:?}")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("degenerate labels: expected exactly two distinct values, found {0}")]
    DegenerateLabels(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not separable")]
    NotSeparable,

    #[error("no convergence: KKT residual {residual:e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    #[error("solver cross-check failed: {0}")]
    SolverMismatch(String),

    #[error("degenerate offset: b = {0:e}")]
    DegenerateOffset(f64),

    #[error("no non-separability witness for the given direction")]
    NoWitness,

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("G minimization stalled: gradient norm {0:e} after 200 iterations")]
    Stalled(f64),

    #[error("check not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
