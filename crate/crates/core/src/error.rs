use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("value out of range: {value} at index {index}")]
    ValueOutOfRange { value: f64, index: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("empty image: rows and cols must both be at least 1")]
    EmptyImage,

    #[error("cell ({0}, {1}) is outside the grid")]
    CellOutOfGrid(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u8, u8),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown kind: {0}")]
    UnknownKind(String),

    #[error("empty batch")]
    EmptyBatch,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedHeader(_) => "malformed_header",
            Error::ValueOutOfRange { .. } => "value_out_of_range",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::EmptyImage => "empty_image",
            Error::CellOutOfGrid(..) => "cell_out_of_grid",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::UnknownKind(_) => "unknown_kind",
            Error::EmptyBatch => "empty_batch",
        }
    }
}
