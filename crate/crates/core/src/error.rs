use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spacing {0:?}: every component must be finite and > 0")]
    InvalidSpacing([f64; 3]),

    #[error("invalid dimensions {0:?}: every axis needs at least one voxel")]
    InvalidDims([usize; 3]),

    #[error("voxel buffer holds {got} values but dims require {expected}")]
    VoxelCountMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("distance transform needs at least one seed voxel")]
    EmptySeeds,

    #[error("mask is empty")]
    EmptyMask,

    #[error("error margin must be finite and > 0, got {0}")]
    InvalidMargin(f64),

    #[error("insufficient headroom for a {margin_mm} mm dilation: need {needed:?} background voxels per axis")]
    InsufficientHeadroom { margin_mm: f64, needed: [usize; 3] },

    #[error("degenerate fraction {0}: expected a value strictly between 0 and 1")]
    DegenerateFraction(f64),

    #[error("probability {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("degrees of freedom must be > 0, got {0}")]
    InvalidDegreesOfFreedom(f64),

    #[error("sample too small: {context} has {n} values, need at least 2")]
    SampleTooSmall { context: String, n: usize },

    #[error("expected exactly two groups, found {0:?}")]
    GroupCount(Vec<String>),

    #[error("invalid phantom spec: {0}")]
    PhantomSpec(String),

    #[error("organs '{first}' and '{second}' overlap")]
    OrganOverlap { first: String, second: String },

    #[error("ellipsoid '{0}' does not fit inside the grid with the required headroom")]
    OutOfBounds(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("subject '{subject}': {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
