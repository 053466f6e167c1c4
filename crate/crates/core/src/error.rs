use thiserror::Error;

/// Errors raised by operator construction, set construction and the solvers.
#[derive(Debug, Error)]
pub enum BuqoError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("index {index} out of range for a grid of {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("mask too large for inpainting kernels: pixel {0} has no observed neighbour")]
    UnsupportedPixel(usize),
    #[error("alpha = {alpha} outside the validity range ]{lower:e}, 1[ of the conservative credible region")]
    AlphaOutOfRange { alpha: f64, lower: f64 },
    #[error("MAP estimate infeasible: ||Phi x - y|| = {residual} exceeds epsilon = {epsilon}")]
    InfeasibleMap { residual: f64, epsilon: f64 },
    #[error("degenerate MAP; lambda undefined (||Psi x||_1 = 0)")]
    DegenerateMap,
    #[error("surrogate not in the structure set: {0}")]
    SurrogateInfeasible(String),
    #[error("empty background mask")]
    EmptyMask,
    #[error("no structure energy in MAP (||x_map - x_surrogate|| = {0:e})")]
    NoStructureEnergy(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BuqoError>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(BuqoError::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BuqoError {
    BuqoError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
