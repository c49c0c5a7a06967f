use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field dimensions {expected:?} and {found:?} do not match")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("landmark ({row}, {col}) lies outside the {height}x{width} image")]
    LandmarkOutOfBounds {
        row: i64,
        col: i64,
        height: usize,
        width: usize,
    },

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("non-finite value in `{field}` after iteration {iteration}")]
    NonFinite {
        field: &'static str,
        iteration: usize,
    },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("malformed image header: {0}")]
    MalformedHeader(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
