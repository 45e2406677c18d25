use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("loss `{0}` is not linear-odd")]
    NotLinearOdd(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(&'static str),

    #[error("function is not even: f({x}) = {left} but f(-{x}) = {right}")]
    NotEven { x: f64, left: f64, right: f64 },

    #[error("no affine odd bound for loss `{0}`")]
    NoAffineBound(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid label {0} (expected -1 or +1)")]
    InvalidLabel(f64),

    #[error("invalid noise rates (p+ = {p_plus}, p- = {p_minus}); each must lie in [0, 0.5)")]
    InvalidNoise { p_plus: f64, p_minus: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear system is singular or not positive definite")]
    Singular,

    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
