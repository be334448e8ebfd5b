use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix side {side} exceeds the configured cap of {cap}")]
    SizeCap { side: usize, cap: usize },

    #[error("memory cap exceeded: {needed} bytes requested, cap is {cap} bytes")]
    MemoryCap { needed: usize, cap: usize },

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("unsupported local dimension d = {d}: {reason}")]
    UnsupportedDimension { d: usize, reason: &'static str },

    #[error("operator is not Hermitian (imaginary residue {residue:e})")]
    NotHermitian { residue: f64 },

    #[error("matrix is not unitary (residue {residue:e})")]
    NotUnitary { residue: f64 },

    #[error("operator is not a projector (residue {residue:e})")]
    NotProjector { residue: f64 },

    #[error("vector is not orthogonal to the maximally entangled state (overlap {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
