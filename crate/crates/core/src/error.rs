use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BeasError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BeasError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    InputShape {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("value out of range: {0}")]
    InputRange(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("contour diverged: radius {radius:.2} exceeds limit {limit:.2}")]
    Divergence { radius: f64, limit: f64 },

    #[error("anchor {0} not found")]
    AnchorNotFound(u64),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BeasError {
    /// Stable machine-readable code, shared by the session protocol and the
    /// C interface.
    pub fn code(&self) -> &'static str {
        match self {
            BeasError::Config(_) => "CONFIG",
            BeasError::InputShape { .. } => "INPUT_SHAPE",
            BeasError::InputRange(_) => "INPUT_RANGE",
            BeasError::Initialization(_) => "INITIALIZATION",
            BeasError::Divergence { .. } => "DIVERGENCE",
            BeasError::AnchorNotFound(_) => "ANCHOR_NOT_FOUND",
            BeasError::UnsupportedFormat(_) => "UNSUPPORTED_FORMAT",
            BeasError::Document(_) => "DOCUMENT",
            BeasError::Io { .. } => "IO",
        }
    }

    pub(crate) fn shape(expected: (usize, usize), actual: (usize, usize)) -> Self {
        BeasError::InputShape { expected, actual }
    }
}
