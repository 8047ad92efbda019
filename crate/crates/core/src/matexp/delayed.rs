//! Delayed matrix exponential for `h'(t) = A h(t - d)` with the constant
//! history `h(s) = h0` on `[-d, 0]`.
//!
//! By the method of steps the solution operator is piecewise polynomial: on
//! `[(n-1)d, nd)` it equals `sum_{k=0..n} A^k (t - (k-1)d)^k / k!`.

use crate::error::{Error, Result};
use crate::numkit::Matrix;

fn check(a: &Matrix, delay: f64, t: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "generator must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(delay > 0.0) || !delay.is_finite() {
        return Err(Error::Domain(format!("delay must be positive and finite, got {delay}")));
    }
    if !t.is_finite() || t < -delay {
        return Err(Error::Domain(format!(
            "delayed exponential is defined for t >= -d = {}, got {t}",
            -delay
        )));
    }
    Ok(())
}

/// Polynomial coefficients `c_k = (t - (k-1)d)^k / k!` for `k = 0..=n`.
fn coefficients(delay: f64, t: f64) -> Vec<f64> {
    let segments = if t < 0.0 { 0 } else { (t / delay).floor() as usize + 1 };
    let mut coeffs = Vec::with_capacity(segments + 1);
    coeffs.push(1.0);
    let mut log_factorial = 0.0;
    for k in 1..=segments {
        log_factorial += (k as f64).ln();
        let tau = t - (k as f64 - 1.0) * delay;
        coeffs.push(if tau > 0.0 {
            (k as f64 * tau.ln() - log_factorial).exp()
        } else {
            0.0
        });
    }
    coeffs
}

pub fn delayed_expm(a: &Matrix, delay: f64, t: f64) -> Result<Matrix> {
    check(a, delay, t)?;
    let n = a.nrows();
    let coeffs = coefficients(delay, t);
    let mut power = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for &c in &coeffs[1..] {
        power = a * &power;
        sum += c * &power;
    }
    Ok(sum)
}

/// Gradient of `<upstream, delayed_expm(A, d, t)>` with respect to `A`.
///
/// Reverse-mode through the power chain `P_k = A P_{k-1}`: the adjoint of
/// `P_k` is `c_k U + A^T adj(P_{k+1})` and each step contributes
/// `adj(P_k) P_{k-1}^T`.
pub fn delayed_expm_grad(a: &Matrix, delay: f64, t: f64, upstream: &Matrix) -> Result<Matrix> {
    check(a, delay, t)?;
    let n = a.nrows();
    if upstream.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "upstream gradient is {:?}, expected {n}x{n}",
            upstream.shape()
        )));
    }
    let coeffs = coefficients(delay, t);
    let top = coeffs.len() - 1;
    let mut grad = Matrix::zeros(n, n);
    if top == 0 {
        return Ok(grad);
    }
    let mut powers = Vec::with_capacity(top);
    powers.push(Matrix::identity(n, n));
    for k in 1..top {
        powers.push(a * &powers[k - 1]);
    }
    let at = a.transpose();
    let mut adjoint = coeffs[top] * upstream;
    for k in (1..=top).rev() {
        grad += &adjoint * powers[k - 1].transpose();
        if k > 1 {
            adjoint = coeffs[k - 1] * upstream + &at * adjoint;
        }
    }
    Ok(grad)
}
