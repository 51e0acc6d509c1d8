use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{cholesky, least_squares, refined_solve};
use crate::{Error, Result};

/// How the combiner weights are regularized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StackingConfig {
    /// Unregularized least squares; needs at least as many samples as taps.
    #[default]
    Plain,
    /// Adds `lambda |alpha|_2^2`.
    Ridge { lambda: f64 },
    /// Adds `lambda |alpha|_1`, shrinking unhelpful taps to exactly zero.
    Sparse { lambda: f64 },
}

impl StackingConfig {
    pub fn lambda(&self) -> f64 {
        match *self {
            StackingConfig::Plain => 0.0,
            StackingConfig::Ridge { lambda } | StackingConfig::Sparse { lambda } => lambda,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        match self {
            StackingConfig::Plain => StackingConfig::Plain,
            StackingConfig::Ridge { .. } => StackingConfig::Ridge { lambda },
            StackingConfig::Sparse { .. } => StackingConfig::Sparse { lambda },
        }
    }
}

const SPARSE_MAX_SWEEPS: usize = 1_000_000;

/// Combiner weights minimizing `1/2 |y - F alpha|^2` plus the configured
/// penalty, where column `i` of `F` holds the predictions of tap `i`.
pub fn fit_stacking(f: &DMatrix<f64>, y: &[f64], cfg: StackingConfig) -> Result<DVector<f64>> {
    let (n, p) = f.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if p == 0 {
        return Err(Error::Empty("stacking design has no columns"));
    }
    let lambda = cfg.lambda();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be finite and >= 0" });
    }
    let y = DVector::from_column_slice(y);
    match cfg {
        StackingConfig::Plain => {
            if n < p {
                return Err(Error::Underdetermined { needed: p, taps: p, got: n });
            }
            least_squares(f, &y)
        }
        StackingConfig::Ridge { lambda } => {
            let mut gram = f.tr_mul(f);
            for i in 0..p {
                gram[(i, i)] += lambda;
            }
            let rhs = f.tr_mul(&y);
            let chol = cholesky(gram.clone()).map_err(|_| Error::RankDeficient)?;
            refined_solve(&gram, &chol, &rhs)
        }
        StackingConfig::Sparse { lambda } => {
            let gram = f.tr_mul(f);
            let fty = f.tr_mul(&y);
            match feature_sign(&gram, &fty, lambda) {
                Some(alpha) => Ok(alpha),
                None => lasso_coordinate_descent(&gram, &fty, lambda),
            }
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Largest violation of the optimality conditions of the l1 problem, given
/// `grad = F^T (y - F alpha)`.
fn kkt_violation(alpha: &DVector<f64>, grad: &DVector<f64>, lambda: f64) -> f64 {
    alpha
        .iter()
        .zip(grad.iter())
        .map(|(&a, &g)| if a == 0.0 { (g.abs() - lambda).max(0.0) } else { (g - lambda * a.signum()).abs() })
        .fold(0.0, f64::max)
}

fn kkt_tolerance(fty: &DVector<f64>) -> f64 {
    1e-9 * (fty.amax() * 1e-3).max(1.0)
}

fn lasso_objective(gram: &DMatrix<f64>, fty: &DVector<f64>, lambda: f64, alpha: &DVector<f64>) -> f64 {
    0.5 * alpha.dot(&(gram * alpha)) - fty.dot(alpha) + lambda * alpha.lp_norm(1)
}

const FEATURE_SIGN_MAX_STEPS: usize = 10_000;

/// Feature-sign search: grows an active set one violating coordinate at a
/// time, solves the stationarity equations for the current sign pattern and
/// line-searches towards that solution through every zero crossing. Returns
/// `None` when a restricted Gram matrix is singular or the search stalls.
fn feature_sign(gram: &DMatrix<f64>, fty: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let p = gram.ncols();
    let tol = kkt_tolerance(fty);
    let mut alpha = DVector::zeros(p);
    let mut active: Vec<usize> = Vec::new();
    let mut signs = vec![0.0; p];
    for _ in 0..FEATURE_SIGN_MAX_STEPS {
        let grad = fty - gram * &alpha;
        if kkt_violation(&alpha, &grad, lambda) <= tol {
            return Some(alpha);
        }
        let sign_ok = active.iter().all(|&i| (grad[i] - lambda * signs[i]).abs() <= tol);
        if sign_ok {
            let (i, g) = (0..p)
                .filter(|i| alpha[*i] == 0.0)
                .map(|i| (i, grad[i]))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
            if g.abs() <= lambda + tol {
                return None;
            }
            signs[i] = g.signum();
            if !active.contains(&i) {
                active.push(i);
            }
        }
        let support: Vec<(usize, f64)> = active.iter().map(|&i| (i, signs[i])).collect();
        let target = unconstrained_on_support(gram, fty, lambda, &support, p)?;
        // Candidates: the target itself and every point where an active
        // coefficient changes sign on the way there.
        let mut best = (lasso_objective(gram, fty, lambda, &target), target.clone());
        for &(i, _) in &support {
            let (a, t) = (alpha[i], target[i]);
            if a != 0.0 && a.signum() != t.signum() {
                let s = a / (a - t);
                let mut point = &alpha + (&target - &alpha) * s;
                point[i] = 0.0;
                let value = lasso_objective(gram, fty, lambda, &point);
                if value < best.0 {
                    best = (value, point);
                }
            }
        }
        alpha = best.1;
        active.retain(|&i| alpha[i] != 0.0);
        for i in 0..p {
            signs[i] = if alpha[i] != 0.0 { alpha[i].signum() } else { 0.0 };
        }
    }
    None
}

fn unconstrained_on_support(
    gram: &DMatrix<f64>,
    fty: &DVector<f64>,
    lambda: f64,
    support: &[(usize, f64)],
    p: usize,
) -> Option<DVector<f64>> {
    let mut out = DVector::zeros(p);
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |r, c| gram[(support[r].0, support[c].0)]);
    let rhs = DVector::from_fn(k, |r, _| fty[support[r].0] - lambda * support[r].1);
    let chol = cholesky(sub.clone()).ok()?;
    let z = refined_solve(&sub, &chol, &rhs).ok()?;
    for (r, &(i, _)) in support.iter().enumerate() {
        out[i] = z[r];
    }
    Some(out)
}

/// Cyclic coordinate descent on the Gram matrix; the fallback when
/// feature-sign search hits a singular restricted system. Once the support looks
/// settled, the stationarity equations on that support are solved exactly;
/// the result is accepted only if it satisfies every subgradient condition.
fn lasso_coordinate_descent(gram: &DMatrix<f64>, fty: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let p = gram.ncols();
    let tol = kkt_tolerance(fty);
    let mut alpha = DVector::zeros(p);
    let mut grad = fty.clone();
    let mut last_support: Vec<(usize, f64)> = Vec::new();
    for sweep in 0..SPARSE_MAX_SWEEPS {
        for i in 0..p {
            let gii = gram[(i, i)];
            if gii <= 0.0 {
                continue;
            }
            let old = alpha[i];
            let new = soft_threshold(old + grad[i] / gii, lambda / gii);
            let delta = new - old;
            if delta != 0.0 {
                alpha[i] = new;
                grad.axpy(-delta, &gram.column(i), 1.0);
            }
        }
        if kkt_violation(&alpha, &grad, lambda) <= tol {
            // Confirm against a freshly computed gradient; the running one drifts.
            grad = fty - gram * &alpha;
            if kkt_violation(&alpha, &grad, lambda) <= tol {
                return Ok(alpha);
            }
        } else if sweep % 1000 == 999 {
            grad = fty - gram * &alpha;
        }
        let support: Vec<(usize, f64)> =
            alpha.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, a)| (i, a.signum())).collect();
        if support == last_support {
            if let Some(candidate) = solve_on_support(gram, fty, lambda, &support, p) {
                let g = fty - gram * &candidate;
                if kkt_violation(&candidate, &g, lambda) <= tol {
                    return Ok(candidate);
                }
            }
        }
        last_support = support;
    }
    Err(Error::NoConvergence(SPARSE_MAX_SWEEPS))
}

/// Solves `G_AA a = (F^T y)_A - lambda s_A` and keeps the result only if it
/// reproduces the sign pattern `s`.
fn solve_on_support(
    gram: &DMatrix<f64>,
    fty: &DVector<f64>,
    lambda: f64,
    support: &[(usize, f64)],
    p: usize,
) -> Option<DVector<f64>> {
    let mut out = DVector::zeros(p);
    if support.is_empty() {
        return Some(out);
    }
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |r, c| gram[(support[r].0, support[c].0)]);
    let rhs = DVector::from_fn(k, |r, _| fty[support[r].0] - lambda * support[r].1);
    let chol = cholesky(sub.clone()).ok()?;
    // The subgradient check on the caller's side decides acceptance.
    let z = refined_solve(&sub, &chol, &rhs).unwrap_or_else(|_| chol.solve(&rhs));
    for (r, &(i, s)) in support.iter().enumerate() {
        if z[r] * s <= 0.0 {
            return None;
        }
        out[i] = z[r];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_single_predictor() {
        let y = [1.0, -2.0, 0.5, 3.0];
        let f = DMatrix::from_column_slice(4, 1, &y);
        let a = fit_stacking(&f, &y, StackingConfig::Plain).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_columns_project() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let f = DMatrix::from_row_slice(4, 2, &[s, 0.0, s, 0.0, 0.0, s, 0.0, -s]);
        let y = [1.0, 2.0, 3.0, 4.0];
        let a = fit_stacking(&f, &y, StackingConfig::Plain).unwrap();
        let expected = f.tr_mul(&DVector::from_column_slice(&y));
        assert!((a - expected).amax() < 1e-13);
    }

    #[test]
    fn large_lambda_zeroes_everything() {
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.2, 1.0, -0.4, 0.3]);
        let y = [1.0, 0.7, -0.2];
        let threshold = f.tr_mul(&DVector::from_column_slice(&y)).amax();
        let a = fit_stacking(&f, &y, StackingConfig::Sparse { lambda: threshold }).unwrap();
        assert!(a.iter().all(|&v| v == 0.0));
        let a = fit_stacking(&f, &y, StackingConfig::Sparse { lambda: 0.9 * threshold }).unwrap();
        assert!(a.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn feature_sign_agrees_with_coordinate_descent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = DMatrix::from_fn(30, 5, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..30).map(|r| libm::cos(r as f64 * 0.5)).collect();
        let gram = f.tr_mul(&f);
        let fty = f.tr_mul(&DVector::from_column_slice(&y));
        for lambda in [0.0, 0.05, 0.5, 2.0] {
            let a = feature_sign(&gram, &fty, lambda).unwrap();
            let b = lasso_coordinate_descent(&gram, &fty, lambda).unwrap();
            assert!((&a - &b).amax() < 1e-6, "lambda {lambda}: {a} {b}");
        }
    }

    #[test]
    fn ridge_shrinks() {
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.2, 1.0, -0.4, 0.3]);
        let y = [1.0, 0.7, -0.2];
        let plain = fit_stacking(&f, &y, StackingConfig::Plain).unwrap();
        let ridge = fit_stacking(&f, &y, StackingConfig::Ridge { lambda: 10.0 }).unwrap();
        assert!(ridge.norm() < plain.norm());
        let zero = fit_stacking(&f, &y, StackingConfig::Ridge { lambda: 0.0 }).unwrap();
        assert!((zero - plain).amax() < 1e-10);
    }

    #[test]
    fn plain_needs_enough_rows() {
        let f = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(fit_stacking(&f, &[1.0], StackingConfig::Plain), Err(Error::Underdetermined { .. })));
        assert!(fit_stacking(&f, &[1.0], StackingConfig::Ridge { lambda: 1.0 }).is_ok());
        assert!(fit_stacking(&f, &[1.0], StackingConfig::Sparse { lambda: -1.0 }).is_err());
    }
}
