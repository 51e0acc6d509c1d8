use thiserror::Error;

/// Errors reported by the kernel, learning and dataset routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("kernel matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("regularized kernel matrix is not positive definite; increase the regularization constant")]
    NotPositiveDefinite,
    #[error("linear solve residual {0:e} exceeds tolerance; increase the regularization constant")]
    IllConditioned(f64),
    #[error("need at least {needed} samples for {taps} unregularized stacking weights, got {got}; use ridge or sparse stacking")]
    Underdetermined { needed: usize, taps: usize, got: usize },
    #[error("stacking design matrix is rank deficient; use ridge or sparse stacking")]
    RankDeficient,
    #[error("solver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("dictionary budget of {0} samples exhausted")]
    Capacity(usize),
    #[error("online filter diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: &'static str },
    #[error("target variance is zero; normalized MSE is undefined")]
    DegenerateVariance,
    #[error("prediction range {start}..{end} is invalid: {reason}")]
    InvalidRange { start: usize, end: usize, reason: &'static str },
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("grid has no points")]
    EmptyGrid,
    #[error("grid search found no configuration that could be fitted")]
    NoFeasibleConfiguration,
}

impl Error {
    /// True for failures of a numerical routine (as opposed to bad arguments).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_)
                | Error::NotPositiveDefinite
                | Error::IllConditioned(_)
                | Error::RankDeficient
                | Error::NoConvergence(_)
                | Error::Diverged { .. }
                | Error::DegenerateVariance
                | Error::NoFeasibleConfiguration
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
