use std::path::PathBuf;

use crate::segmenter::BoundaryTrace;

/// Everything that can go wrong between reading a slice and writing its mask.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("image has no contrast (all intensities equal)")]
    NoContrast,

    #[error("threshold {threshold} leaves the {side} class empty")]
    EmptyClass { threshold: f64, side: &'static str },

    #[error("no seed found along the diagonal")]
    SeedNotFound,

    #[error("CUSUM threshold {h} is below the floor {h_min}; regions are indistinguishable")]
    DegenerateThreshold { h: f64, h_min: f64 },

    #[error("tracker did not terminate within {max_steps} steps")]
    TrackerDiverged {
        max_steps: usize,
        partial: Box<BoundaryTrace>,
    },

    #[error("boundary trace has no change points")]
    EmptyTrace,

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("confusion counts sum to zero")]
    EmptyImage,

    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),
}

impl Error {
    /// Stable variant name, used in JSON reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedFile { .. } => "MalformedFile",
            Error::Io { .. } => "IoError",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::NoContrast => "NoContrast",
            Error::EmptyClass { .. } => "EmptyClass",
            Error::SeedNotFound => "SeedNotFound",
            Error::DegenerateThreshold { .. } => "DegenerateThreshold",
            Error::TrackerDiverged { .. } => "TrackerDiverged",
            Error::EmptyTrace => "EmptyTrace",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyImage => "EmptyImage",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidImage(_) => "InvalidImage",
        }
    }

    /// True for failures of the segmentation itself, as opposed to I/O or usage problems.
    pub fn is_segmentation_failure(&self) -> bool {
        matches!(
            self,
            Error::NoContrast
                | Error::EmptyClass { .. }
                | Error::SeedNotFound
                | Error::DegenerateThreshold { .. }
                | Error::TrackerDiverged { .. }
                | Error::EmptyTrace
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
