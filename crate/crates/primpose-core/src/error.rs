//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed value (non-unit quaternion, degenerate bounding box, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point required in front of the camera has z at or below the cutoff.
    #[error("point behind camera (z = {z:e})")]
    BehindCamera { z: f64 },

    /// Depth that must be strictly positive is not.
    #[error("invalid depth: T_z = {0} must be > 0")]
    InvalidDepth(f64),

    /// Buffer or point-set dimensions disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Scalar parameter outside its documented range.
    #[error("parameter out of range: {0}")]
    InvalidParam(String),

    /// Input admits no unique solution (rank-deficient or too few points).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// RANSAC found no hypothesis with enough inliers.
    #[error("no consensus: best hypothesis has {best} inliers, need {need}")]
    NoConsensus { best: usize, need: usize },

    /// Foreground extraction found no object pixels.
    #[error("empty object: no foreground pixels")]
    EmptyObject,

    /// Iterative solve diverged or left its valid domain.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Non-finite intermediate values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Every pose pair was excluded before aggregation.
    #[error("empty after exclusion: no pose pairs left to aggregate")]
    EmptyAfterExclusion,

    /// Invalid generation or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, tagged with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed on-disk artifact, tagged with file and offending field.
    #[error("{}: {msg}", file.display())]
    Parse { file: PathBuf, msg: String },

    /// Failure while producing one dataset sample, tagged with its id.
    #[error("sample {id}: {source}")]
    Sample {
        id: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
