//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numeric kernel, text pipeline, model, training
/// protocol, and persistence layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible. The message names both shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A computation produced a non-finite value or could not proceed
    /// numerically.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Internal objects are out of sync (for example a backward cache that
    /// does not match the parameter store it was produced from).
    #[error("inconsistent state: {0}")]
    State(String),

    /// A text input file is malformed. `line` is 1-based.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// A persisted model file does not start with the expected magic bytes.
    #[error("not a model file: bad magic")]
    BadMagic,

    /// A persisted model file declares a format version this build cannot read.
    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    /// A persisted model file is internally inconsistent (truncated payload,
    /// overlapping tensor offsets, trailing bytes, ...).
    #[error("model file integrity: {0}")]
    Integrity(String),

    /// A cross-validation fold failed; wraps the underlying error so the
    /// caller can tell which fold died.
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
