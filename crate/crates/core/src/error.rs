use thiserror::Error;

/// Crate-wide error type. Validation problems (bad geometry, bad config,
/// mismatched dimensions) are separated from numerical failures (singular
/// systems, residuals out of tolerance) so the CLI can map them to distinct
/// exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision at row {row}")]
    Singular { row: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the arithmetic itself rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
