use std::path::PathBuf;

use crate::imaging::BoundingBox;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid bounding box {0:?}")]
    InvalidBox(BoundingBox),
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    TooSmall { width: u32, height: u32, min: u32 },
    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: u64, message: String },
    #[error("encode error: {0}")]
    Encode(String),
    #[error("shape mismatch at layer {layer} ({name}): {message}")]
    Shape {
        layer: usize,
        name: &'static str,
        message: String,
    },
    #[error("numerical error{}: {message}", epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default())]
    Numerical { epoch: Option<u32>, message: String },
    #[error("no detections to aggregate")]
    NoDetections,
    #[error("no stem detected in any of {frames} frames")]
    NoStemDetected { frames: usize },
    #[error("crop of {size} does not fit in a {width}x{height} image")]
    InvalidCrop { size: u32, width: u32, height: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("video {video}: missing frames {missing:?}")]
    Gap { video: String, missing: Vec<u32> },
    #[error("{path}: expected {expected:?}, found {found:?}")]
    Dimension {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("split error: {0}")]
    Split(String),
    #[error("insufficient class population, need {needed} per class, have {counts:?} (dry, wet, bubble)")]
    Balance { needed: usize, counts: [usize; 3] },
    #[error("annotator coverage: {0}")]
    Coverage(String),
    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("duplicate model name {0:?}")]
    DuplicateName(String),
    #[error("ground truth missing for frames {0:?}")]
    MissingGroundTruth(Vec<u32>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
