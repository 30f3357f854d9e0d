//! Error type shared across the crate.

use crate::numerics::DualSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("QP solver did not converge: residual {residual:.3e} after {iterations} sweeps")]
    DidNotConverge {
        best: DualSolution,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("granulation left fewer than 2 labels; cannot train")]
    DegenerateGranulation,

    #[error("training requires at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("pair ({p}, {q}) failed to train: {reason}")]
    DegeneratePair { p: usize, q: usize, reason: String },

    #[error("class {class} has only {count} members, need at least {needed}")]
    ClassTooSmall {
        class: usize,
        count: usize,
        needed: usize,
    },

    #[error("paired differences have zero variance")]
    DegenerateVariance,

    #[error("all paired differences are zero")]
    AllZeroDifferences,

    #[error("AUC undefined: class {0} absent from truth")]
    UndefinedAuc(usize),

    #[error("parse error at row {row}, column {col}: {message}")]
    ParseError {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
