use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: dimensions, ranges, malformed configuration or data.
    #[error("validation error: {0}")]
    Validation(String),

    /// Hypotheses required by the uniform-ergodicity bound do not hold.
    #[error("theorem conditions violated: {0}")]
    TheoremConditions(String),

    /// Numerical failure at runtime (factorization, unusable error bound, ...).
    #[error("numerical error: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    #[cfg_attr(not(feature = "cli"), allow(dead_code))]
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime/numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::TheoremConditions(_) => 1,
            Error::Numeric(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}
