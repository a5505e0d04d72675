use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid assignment: expected length {expected}, got {got}")]
    InvalidAssignment { expected: usize, got: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("system has no solution")]
    NoSolution,

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("variable {var} out of range (n = {n})")]
    VarOutOfRange { var: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error at k={k}, r={r}: {msg}")]
    Domain { k: usize, r: f64, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
