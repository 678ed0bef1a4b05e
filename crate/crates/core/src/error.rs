//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any part of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("row {row} has near-zero norm ({norm:e}) and cannot be normalized")]
    ZeroRow { row: usize, norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("timestep {step} out of range 0..={max}")]
    StepOutOfRange { step: usize, max: usize },

    #[error("non-finite activation in denoiser output at row {row}, col {col}")]
    NonFiniteActivation { row: usize, col: usize },

    #[error("backward tape does not match this call: {0}")]
    TapeMismatch(String),

    #[error("shape mismatch between parameter trees: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in tensor {tensor}")]
    NonFiniteGrad { tensor: String },

    #[error("non-finite loss at training step {step} (l_diff={l_diff}, l_topo={l_topo})")]
    NonFiniteLoss {
        step: usize,
        l_diff: f64,
        l_topo: f64,
    },

    #[error("dataset has {rows} rows, need at least {needed}")]
    DatasetTooSmall { rows: usize, needed: usize },

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: String,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("truncated file {path}: needed {needed} more bytes for {reading}")]
    TruncatedFile {
        path: String,
        needed: usize,
        reading: &'static str,
    },

    #[error("unsupported format version {found} in {path} (supported: {supported})")]
    VersionUnsupported {
        path: String,
        found: u32,
        supported: u32,
    },

    #[error("corrupt file {path}: {detail}")]
    CorruptFile { path: String, detail: String },

    #[error("pair ids are not aligned: {0}")]
    AlignmentError(String),

    #[error("covariance is degenerate (rank < 2): {0}")]
    DegenerateCovariance(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
