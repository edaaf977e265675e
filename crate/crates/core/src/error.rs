use thiserror::Error;

/// Errors produced by the learners, metrics and parsers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid label {0}; expected +1 or -1")]
    InvalidLabel(f64),

    #[error("negative variance {0} passed to a surrogate loss")]
    NegativeVariance(f64),

    #[error("no opposite-class history available")]
    NoHistory,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("buffer budget must be positive")]
    ZeroBudget,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset has a single class after binarization")]
    SingleClass,

    #[error("class with {size} members cannot be split into {folds} folds")]
    ClassTooSmall { size: usize, folds: usize },

    #[error("{0}")]
    InvalidConfig(String),
}
