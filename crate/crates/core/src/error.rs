use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the samplers, the linear-algebra helpers and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// Single-column Gibbs updates cannot move when the matrix is square.
    #[error(
        "the column-wise Gibbs chain is reducible when m = R = {0}; \
         use the two-column (pair) update instead"
    )]
    Reducible(usize),

    #[error(
        "rejection sampler exceeded {0} proposals for a single draw; \
         the Gibbs sampler is recommended for this concentration"
    )]
    RejectionCap(u64),

    #[error("{}: line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
