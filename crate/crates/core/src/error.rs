use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("degenerate homography")]
    DegenerateHomography,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no watermark found")]
    NoWatermarkFound,

    #[error("localization failed: {0}")]
    LocalizationFailed(String),

    #[error("payload of {bits} bits exceeds capacity of {capacity}")]
    PayloadCapacity { bits: usize, capacity: usize },

    #[error("area proportion {0} is unreachable on a 4:3 canvas")]
    AreaUnreachable(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Whether this error means "the image simply carries no detectable mark",
    /// as opposed to bad input or an I/O failure.
    pub fn is_detection_failure(&self) -> bool {
        matches!(self, Error::NoWatermarkFound | Error::LocalizationFailed(_))
    }
}
