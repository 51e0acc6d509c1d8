use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{cholesky, max_asymmetry, refined_solve};
use crate::{Error, Result};

fn regularized(k: &DMatrix<f64>, y: &[f64], c: f64) -> Result<DMatrix<f64>> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter { name: "c", reason: "regularization must be finite and >= 0" });
    }
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.ncols() });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n == 0 {
        return Err(Error::Empty("kernel matrix"));
    }
    let asym = max_asymmetry(k);
    if asym > 1e-10 * k.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += c;
    }
    Ok(a)
}

/// Dual coefficients `beta = (K + c I)^{-1} y`.
///
/// Fails when `K + c I` is not numerically positive definite or the solve
/// cannot reach a relative residual below `1e-8`; both call for a larger `c`.
pub fn krr_fit(k: &DMatrix<f64>, y: &[f64], c: f64) -> Result<DVector<f64>> {
    let a = regularized(k, y, c)?;
    let chol = cholesky(a.clone())?;
    refined_solve(&a, &chol, &DVector::from_column_slice(y))
}

/// Dual coefficients together with leave-one-out predictions.
#[derive(Debug, Clone)]
pub struct KrrFit {
    pub beta: DVector<f64>,
    /// Prediction for sample `n` from the model fitted without it.
    pub loo: Vec<f64>,
}

/// Like [`krr_fit`], also returning the closed-form leave-one-out predictions
/// `y_n - beta_n / [(K + c I)^{-1}]_{nn}`.
pub fn krr_fit_with_loo(k: &DMatrix<f64>, y: &[f64], c: f64) -> Result<KrrFit> {
    let a = regularized(k, y, c)?;
    let chol = cholesky(a.clone())?;
    let beta = refined_solve(&a, &chol, &DVector::from_column_slice(y))?;
    let inv = chol.inverse();
    let loo = (0..y.len()).map(|n| y[n] - beta[n] / inv[(n, n)]).collect();
    Ok(KrrFit { beta, loo })
}
