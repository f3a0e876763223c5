use std::path::PathBuf;

/// Errors produced by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate measurements")]
    DegenerateMeasurements,

    #[error("ratio undefined at sign pair")]
    RatioUndefinedAtSignPair,

    #[error("prox-linear requires smooth inner map")]
    ProxLinearRequiresSmooth,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{context}: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::ProxLinearRequiresSmooth
            | Error::Json(_) => true,
            Error::Cell { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
