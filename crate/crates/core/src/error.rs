use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Set matching needs at least as many predictions as ground truths.
    #[error("{predictions} predictions cannot cover {ground_truths} ground truths")]
    TooFewPredictions { predictions: usize, ground_truths: usize },

    #[error("cost matrix entry ({row}, {col}) is not finite: {value}")]
    NonFiniteCost { row: usize, col: usize, value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("frames missing from {side}: {ids:?}")]
    MissingFrames { side: &'static str, ids: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
