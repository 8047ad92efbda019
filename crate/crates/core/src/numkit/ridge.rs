//! Multi-output ridge regression by the normal equations.

use nalgebra::Cholesky;

use super::Matrix;
use crate::error::{Error, Result};

/// Without a penalty, a Cholesky factor whose extreme diagonal entries differ
/// by more than this ratio (condition number beyond ~1e14) is singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-7;

/// `W = argmin ||X W - Y||_F^2 + lambda ||W||_F^2` for `X: n x p`, `Y: n x q`.
///
/// Solves `(X^T X + lambda I) W = X^T Y` with a Cholesky factorization.
pub fn ridge_solve(x: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix> {
    if x.nrows() == 0 {
        return Err(Error::Domain("ridge_solve needs at least one sample".into()));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "design has {} rows but targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ridge penalty must be finite and >= 0, got {lambda}")));
    }
    ridge_solve_normal(x.tr_mul(x), &x.tr_mul(y), lambda)
}

/// Solves `(G + lambda I) W = R` for a precomputed Gram matrix `G = X^T X`
/// and right-hand side `R = X^T Y`.
pub fn ridge_solve_normal(mut gram: Matrix, rhs: &Matrix, lambda: f64) -> Result<Matrix> {
    if !gram.is_square() || gram.nrows() != rhs.nrows() {
        return Err(Error::Shape(format!(
            "gram {:?} does not match right-hand side {:?}",
            gram.shape(),
            rhs.shape()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ridge penalty must be finite and >= 0, got {lambda}")));
    }
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let p = gram.nrows();
    let singular = || {
        Error::Numerical(format!(
            "singular normal equations: X^T X + lambda I is not positive definite \
             (p = {p}, lambda = {lambda}); use a positive ridge penalty"
        ))
    };
    let chol = Cholesky::new(gram).ok_or_else(singular)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lambda == 0.0 && !(lo > hi * PIVOT_RATIO_FLOOR) {
        return Err(singular());
    }
    let w = chol.solve(rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ridge solution is not finite".into()));
    }
    Ok(w)
}

/// Ridge objective `||X W - Y||_F^2 + lambda ||W||_F^2`.
pub fn ridge_objective(x: &Matrix, y: &Matrix, w: &Matrix, lambda: f64) -> f64 {
    (x * w - y).norm_squared() + lambda * w.norm_squared()
}
