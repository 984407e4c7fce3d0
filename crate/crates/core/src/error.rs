use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the kernels, file formats and the codec simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic: expected \"VTEN\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported tensor version {version} / dtype {dtype}")]
    UnsupportedVersion { version: u8, dtype: u8 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("bad PPM header: {0}")]
    BadHeader(String),
    #[error("unsupported PPM maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("voxel-flow stack is empty")]
    EmptyStack,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(i64),
    #[error("timestamp {0} equals the origin")]
    ZeroOffset(i64),
    #[error("singular time matrix (pivot {pivot:e} below threshold)")]
    SingularSystem { pivot: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing frame for display index {0}")]
    MissingFrame(usize),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("frame too small for MS-SSIM ({height}x{width}, need at least 11x11)")]
    TooSmall { height: usize, width: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
