use std::path::PathBuf;

use crate::cubical::PersistencePair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid dimensions {nx}x{ny}x{nz} (spacing {spacing})")]
    InvalidDims {
        nx: usize,
        ny: usize,
        nz: usize,
        spacing: f64,
    },

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("malformed {format} input: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("mask has no {0} voxels; the shape has no boundary")]
    EmptyPhase(&'static str),

    #[error("close width {width} too large for grid {dims:?}")]
    CloseWidth { width: usize, dims: [usize; 3] },

    #[error("instance too large: {cells} cells exceeds limit {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("pair in forbidden quadrant: dim {} birth {} death {}", .0.dim, .0.birth, .0.death)]
    ForbiddenQuadrant(Box<PersistencePair>),

    #[error("pair has a zero critical value: dim {} birth {} death {}", .0.dim, .0.birth, .0.death)]
    ZeroCriticalValue(Box<PersistencePair>),

    #[error("shape does not fit the grid: {0}")]
    ShapeExceedsGrid(String),

    #[error("covariance spectrum clipped on {fraction:.4} of frequencies (limit 0.01)")]
    SpectrumClip { fraction: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The underlying error with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
