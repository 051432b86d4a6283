use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("psf modality mismatch: expected {expected}, model is {actual}")]
    ModalityMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("z = {z} nm lies outside the depth range [{min}, {max}]")]
    DepthOutOfRange { z: f64, min: f64, max: f64 },

    #[error("depth undefined at super-res pixel ({row}, {col}): weighted phasor sum vanishes")]
    UndefinedDepth { row: usize, col: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image encoding failed: {0}")]
    Image(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the input values.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Image(_))
    }
}

/// Structured parse failures for the on-disk formats.
#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("bad magic: expected \"LUGR\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported grid file version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported dtype tag {0}")]
    UnsupportedDtype(u16),

    #[error("truncated header: {found} of {expected} bytes")]
    TruncatedHeader { expected: usize, found: usize },

    #[error("truncated payload: expected {expected} f32 values, found {found_bytes} bytes")]
    TruncatedPayload { expected: usize, found_bytes: usize },

    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },

    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: bad header, expected `{expected}`")]
    BadHeader { line: u64, expected: String },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
}
