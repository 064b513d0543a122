//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("{path}:{line}: {msg}")]
    ModeFile {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("initial state is not physical: {0} (use initialize_unphysical for response inputs)")]
    NonPhysicalState(String),

    #[error("bond dimension cap {cap} exceeded at step {step} (reached {reached})")]
    BondCapExceeded {
        cap: usize,
        step: usize,
        reached: usize,
    },

    #[error("memory kernel covers lags up to {available}, step {requested} requires more")]
    KernelTooShort { available: usize, requested: usize },

    #[error("augmented tensor for k = {k} steps exceeds the dense memory budget (k <= {max})")]
    AdtTooLarge { k: usize, max: usize },

    #[error("spectrum needs at least two resolved peaks, found {found}")]
    TooFewPeaks { found: usize },
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
