use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("record {record} out of range: {message}")]
    Range { record: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rank deficient spectrum: need {needed} positive eigenvalues, spectrum is {spectrum:?}")]
    RankDeficient { needed: usize, spectrum: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
