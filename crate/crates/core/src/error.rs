use thiserror::Error;

use crate::mesh::MeshError;

pub type Result<T> = std::result::Result<T, OmegaError>;

#[derive(Debug, Error)]
pub enum OmegaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A truncated spectrum cannot certify the requested prefix.
    #[error("insufficient spectrum: {0}")]
    InsufficientSpectrum(String),

    #[error("eigen-residual {residual:.3e} exceeds tolerance {tolerance:.3e} (pair {index})")]
    ResidualTooLarge {
        index: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge after {iterations} basis vectors; worst residual {worst_residual:.3e}")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("field bandwidth {bandwidth} with {max_freq} Fourier modes exceeds grid Nyquist limit (grid {grid_size})")]
    BandwidthExceeded {
        bandwidth: usize,
        max_freq: usize,
        grid_size: usize,
    },

    #[error("search inconclusive: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OmegaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        OmegaError::InvalidInput(msg.into())
    }
}
