use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = OlimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OlimError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: {what} has {left} entries, expected {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("price {price} at slot {slot} lies outside [{p_min}, {p_max}]")]
    PriceOutOfBounds {
        slot: usize,
        price: f64,
        p_min: f64,
        p_max: f64,
    },

    #[error("degenerate price context (theta = 1): the reservation function is undefined")]
    DegenerateContext,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance too large for brute force: {slots} slots (limit {limit})")]
    TooLarge { slots: usize, limit: usize },

    #[error("{path}:{row}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl OlimError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        OlimError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OlimError::Io {
            path: path.into(),
            source,
        }
    }
}
