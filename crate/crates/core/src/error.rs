use thiserror::Error;

use crate::lp::LpStatus;
use crate::tuning::CvPoint;

pub type Result<T> = std::result::Result<T, LoveError>;

#[derive(Debug, Error)]
pub enum LoveError {
    /// Inconsistent matrix or vector shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical routine failed (non-PD matrix, singular system, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Internal structure broken (missing rows, undersized groups, ...).
    #[error("structural error: {0}")]
    Structure(String),

    #[error("linear program did not reach optimality: {status:?} ({detail})")]
    Solver { status: LpStatus, detail: String },

    /// The estimator could not find any pure variable.
    #[error("no pure variables found: {0}")]
    NoPureVariables(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    /// Cross-validation found no usable grid value; the trace is attached.
    #[error("cross-validation failed: {message}")]
    CvFailed {
        message: String,
        trace: Vec<CvPoint>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
