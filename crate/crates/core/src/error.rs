use thiserror::Error;

/// Errors raised by the sparsification, constraint and John pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("undefined stable rank: zero matrix")]
    UndefinedStableRank,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance too large for exhaustive verification ({size} > {max})")]
    TooLargeForExhaustive { size: usize, max: usize },

    #[error("M below iteration threshold ({m} < {threshold:.6})")]
    BelowIterationThreshold { m: usize, threshold: f64 },

    #[error("infeasible strict constants: {0}")]
    Infeasible(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid John decomposition: {0}")]
    InvalidJohn(#[from] crate::john::JohnValidationError),

    #[error("certificate not met: {0}")]
    CertificateNotMet(String),
}

pub type Result<T> = std::result::Result<T, Error>;
