//! Dense solvers backing kernel ridge regression and the stacking combiner.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

pub(crate) const SOLVE_TOL: f64 = 1e-8;
const REFINE_STEPS: usize = 3;

pub(crate) fn max_asymmetry(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows();
    let mut worst: f64 = 0.0;
    for b in 0..n {
        for a in b + 1..n {
            worst = worst.max((k[(a, b)] - k[(b, a)]).abs());
        }
    }
    worst
}

/// Cholesky factorization of a symmetric matrix, rejecting indefinite input.
pub(crate) fn cholesky(a: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a).ok_or(Error::NotPositiveDefinite)
}

/// Solves `a x = b` with a Cholesky factor of `a`, refining the solution until
/// the relative residual drops below `SOLVE_TOL`.
pub(crate) fn refined_solve(a: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = b.norm();
    let mut x = chol.solve(b);
    if scale == 0.0 {
        return Ok(x);
    }
    let mut rel = (b - a * &x).norm() / scale;
    for _ in 0..REFINE_STEPS {
        if rel < SOLVE_TOL * 1e-3 {
            break;
        }
        let r = b - a * &x;
        let candidate = &x + chol.solve(&r);
        let cand_rel = (b - a * &candidate).norm() / scale;
        if !(cand_rel < rel) {
            break;
        }
        x = candidate;
        rel = cand_rel;
    }
    if !x.iter().all(|v| v.is_finite()) || !(rel < SOLVE_TOL) {
        return Err(Error::IllConditioned(rel));
    }
    Ok(x)
}

/// Least-squares solution of `min |f a - y|` for a full-column-rank `f`.
pub(crate) fn least_squares(f: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = f.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let rank_tol = 1e-12 * diag_max.max(f64::MIN_POSITIVE) * libm::sqrt(f.nrows() as f64);
    if diag_max == 0.0 || r.diagonal().iter().any(|d| d.abs() <= rank_tol) {
        return Err(Error::RankDeficient);
    }
    let solve = |rhs: &DVector<f64>| -> Result<DVector<f64>> {
        r.solve_upper_triangular(&(q.transpose() * rhs)).ok_or(Error::RankDeficient)
    };
    let mut x = solve(y)?;
    // A couple of refinement sweeps on the residual tighten the normal equations
    // for badly conditioned designs.
    for _ in 0..REFINE_STEPS {
        let res = y - f * &x;
        x += solve(&res)?;
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::RankDeficient);
    }
    Ok(x)
}
