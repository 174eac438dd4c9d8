use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by dataset validation, graph construction, and the tests.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: dimension mismatch, out-of-range parameter, bad permutation.
    #[error("invalid input: {0}")]
    Input(String),

    /// Group labels that do not describe a contiguous 1..G labelling.
    #[error("invalid labels: {0}")]
    Labels(String),

    /// A column with zero sample variance where a positive one is required.
    #[error("column {column} has zero variance")]
    ZeroVariance { column: String },

    /// The problem is too large for an exact method.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Argument outside the domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Unsupported combination of options.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A statistic whose null distribution is degenerate (zero variance, zero dof).
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("cannot parse `{value}` at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Failure writing to an already open stream.
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
