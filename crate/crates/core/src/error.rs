use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the squeeze / feature / evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("video has no frames")]
    EmptyVideo,

    #[error("frame {index} is {width}x{height}, expected {expected_width}x{expected_height}{}", source_hint(.source_name))]
    DimensionMismatch {
        index: usize,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
        source_name: Option<String>,
    },

    #[error("frame {index} is malformed: {reason}")]
    MalformedFrame { index: usize, reason: String },

    #[error("video has {frames} frames but {segments} segments were requested")]
    InsufficientFrames { frames: usize, segments: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{height}x{width} frame cannot hold a {patch}x{patch} patch per cell of a {grid}x{grid} grid{}", keyframe_hint(.keyframe))]
    FrameTooSmall {
        height: usize,
        width: usize,
        grid: usize,
        patch: usize,
        keyframe: Option<usize>,
    },

    #[error("patch at ({row}, {col}) of size {patch} exceeds {height}x{width} frame")]
    OffsetOutOfRange {
        row: usize,
        col: usize,
        patch: usize,
        height: usize,
        width: usize,
    },

    #[error("patch side {0} is too small for 3x3 kernels")]
    PatchTooSmall(usize),

    #[error("regularized normal equations are singular")]
    DegenerateDesign,

    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("operation requires a ridge regressor over pooled features")]
    UnsupportedRegressor,

    #[error("feature dimension {got} does not match regressor input dimension {expected}")]
    FeatureDimMismatch { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("logistic fit diverged")]
    FitDiverged,

    #[error("need at least {needed} manifest entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt stream at byte {offset}: {reason}")]
    CorruptStream { offset: u64, reason: String },

    #[error("bad magic {0:?}, expected \"VQSQ\"")]
    BadMagic([u8; 4]),

    #[error("unsupported squeezed-tensor version {0}")]
    BadVersion(u16),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("video {video_id}: {source}")]
    Video {
        video_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Attach the id of the video being processed.
    pub fn for_video(self, video_id: &str) -> Self {
        Error::Video {
            video_id: video_id.to_owned(),
            source: Box::new(self),
        }
    }

    pub fn at_path(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

fn source_hint(name: &Option<String>) -> String {
    name.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
}

fn keyframe_hint(k: &Option<usize>) -> String {
    k.map(|k| format!(" (keyframe {k})")).unwrap_or_default()
}
