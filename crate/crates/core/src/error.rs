use thiserror::Error;

/// Errors raised by the covariant-POVM toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid group model: {0}")]
    InvalidModel(String),

    #[error("group model is empty")]
    EmptyModel,

    #[error("eigenvalue clustering is ambiguous: gap {gap:e} against threshold {threshold:e}")]
    ClusterAmbiguity { gap: f64, threshold: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("seed is not in the commutant of the stability group (residual {0:e})")]
    NotInCommutant(f64),

    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid group point: {0}")]
    InvalidGroupPoint(String),

    #[error("operator is not a perturbation of the seed: {0}")]
    NotAPerturbation(String),

    #[error("perturbation is numerically zero")]
    ZeroPerturbation,

    #[error("seed is extremal; no perturbation witness exists")]
    Extremal,

    #[error("support of the randomizing state overlaps the seed support (overlap {0:e})")]
    SupportOverlap(f64),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("optimizer did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
