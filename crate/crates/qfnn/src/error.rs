//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A cell of an input file failed to parse; `row` is 1-based and counts
    /// data rows (the header, when present, is row 0).
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    /// A model file is missing its version header or uses an unknown schema.
    #[error("model file schema error: {0}")]
    ModelSchema(String),

    /// Training produced a non-finite cost.
    #[error("training diverged at epoch {epoch}: cost is not finite")]
    Diverged { epoch: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
