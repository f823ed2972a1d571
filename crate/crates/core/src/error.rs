use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// Malformed dataset file. `row` is 0 for the header, 1 for the first data row.
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row} has {found} cells, expected {expected}")]
    RowLength {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("class {class} has {count} samples, at least {required} required")]
    DegenerateClass {
        class: u8,
        count: usize,
        required: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid mismatch between fitted projection and dataset")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pooled covariance is not positive definite; increase the regularization")]
    IllConditioned,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("no Bayes rule available for this model: {0}")]
    NoBayesRule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
