use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("explicit scheme unstable: need at least {required_steps} time steps (got {given_steps})")]
    Unstable {
        required_steps: usize,
        given_steps: usize,
    },

    #[error("sigma grid exceeds sigma_max: boundary {boundary} > {sigma_max} pixels")]
    GridExceedsSigmaMax { boundary: f64, sigma_max: f64 },

    #[error("no minimizer guaranteed: {0}")]
    IllPosed(String),

    #[error("non-finite cost at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
