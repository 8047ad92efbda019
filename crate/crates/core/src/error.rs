use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
///
/// The variants group into the three failure classes the CLI maps to exit
/// codes: invalid arguments (`Domain`, `Shape`, `Config`), bad input data
/// (`Io`, `Format`, `Csv`) and numerical failure (`Numerical`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse failures of the binary tensor/checkpoint container.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected \"LTSF\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated input while reading {0}")]
    Truncated(&'static str),
    #[error("shape overflow: dims {0:?} do not fit in memory")]
    ShapeOverflow([u64; 3]),
    #[error("unsupported tensor rank {0}, expected 3")]
    BadRank(u8),
    #[error("bad metadata: {0}")]
    BadMetadata(String),
    #[error("trailing bytes after last block: {0}")]
    TrailingBytes(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from the numbers themselves rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
