use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the synthesis engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed NIfTI file: {0}")]
    Format(String),

    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("validation failed: {0}")]
    Validation(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Min-max normalization of an image whose minimum equals its maximum.
    #[error("cannot normalize a constant image (value {0})")]
    DegenerateNormalization(f64),

    #[error("degenerate mixture fit: {0}")]
    DegenerateFit(String),

    /// Kruskal-Wallis ranking where every observation is tied.
    #[error("degenerate ranking: all {0} observations are identical")]
    DegenerateRanking(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
