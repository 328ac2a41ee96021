//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("downsample target must be >= 1, got {0}")]
    InvalidTarget(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("range must be finite and >= 0, got {0}")]
    InvalidRange(f64),

    #[error("frame axes are not orthonormal: {0}")]
    DegenerateFrame(String),

    #[error("view direction is within the up-axis degeneracy cone (|cos| = {cos_abs:.6})")]
    DegenerateViewDirection { cos_abs: f64 },

    #[error("surface point coincides with the query position")]
    CoincidentPoints,

    #[error("commanded step {step:.3} m exceeds the per-step limit {limit:.3} m")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("invalid surface parameters: {0}")]
    InvalidParams(String),

    #[error("region of interest contains no surface voxels")]
    EmptyRoi,

    #[error("run log has no records")]
    EmptyLog,

    #[error("mission aborted at tick {tick}: {reason}")]
    RuntimeAbort { tick: u64, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }
}
