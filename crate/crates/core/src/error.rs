use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid encoding tree: {0}")]
    Tree(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid degree delta: {0}")]
    Delta(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An internal consistency check failed; this is a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the caller's data rather than by this crate.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}
