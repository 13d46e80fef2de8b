use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or object violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scene file line {line}: {msg}")]
    SceneParse { line: usize, msg: String },

    #[error("missing scene key `{0}`")]
    MissingKey(String),

    #[error("{path}: line {line}: {msg}")]
    MeasurementParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("series truncation L_max = {given} is insufficient for |z|/R = {ratio:.6}; need L_max >= {required}")]
    InsufficientLMax {
        given: usize,
        required: usize,
        ratio: f64,
    },

    #[error("zero seminorm at z = {z:?}; grid or kernel is corrupted")]
    ZeroSeminorm { z: [f64; 3] },

    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(String),

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error("I/O error on {path}: {source}")]
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

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
