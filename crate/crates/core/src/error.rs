use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a precondition (dimension mismatch, unnormalized input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A manifest or data file failed to parse. `line` is 1-based when known.
    #[error("{}", match .line {
        Some(l) => format!("parse error at line {l}: {}", .message),
        None => format!("parse error: {}", .message),
    })]
    Parse { line: Option<usize>, message: String },

    #[error("enumeration refused: {estimate} paths exceeds the limit of {limit}")]
    TooLarge { estimate: u128, limit: u128 },

    #[error("results error: {0}")]
    Results(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
