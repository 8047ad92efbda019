//! Fixed-step explicit integrators.

use std::ops::{Add, Mul};

/// `x + dt f(x)`.
pub fn euler_step<T, F>(mut f: F, x: &[T], dt: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(&[T]) -> Vec<T>,
{
    debug_assert!(dt > 0.0);
    let k = f(x);
    x.iter().zip(&k).map(|(&xi, &ki)| xi + ki * dt).collect()
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<T, F>(mut f: F, x: &[T], dt: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(&[T]) -> Vec<T>,
{
    debug_assert!(dt > 0.0);
    let shifted = |k: &[T], h: f64| -> Vec<T> {
        x.iter().zip(k).map(|(&xi, &ki)| xi + ki * h).collect()
    };
    let k1 = f(x);
    let k2 = f(&shifted(&k1, 0.5 * dt));
    let k3 = f(&shifted(&k2, 0.5 * dt));
    let k4 = f(&shifted(&k3, dt));
    (0..x.len())
        .map(|i| x[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    #[test]
    fn zero_field_leaves_state() {
        let x = [1.5, -2.0];
        assert_eq!(euler_step(|v: &[f64]| vec![0.0; v.len()], &x, 0.1), x);
        assert_eq!(rk4_step(|v: &[f64]| vec![0.0; v.len()], &x, 0.1), x);
    }

    #[test]
    fn exponential_growth_single_step() {
        assert!((euler_step(identity, &[1.0], 0.1)[0] - 1.1).abs() < 1e-15);
        // 1 + h + h^2/2 + h^3/6 + h^4/24 with h = 0.1
        let rk = rk4_step(identity, &[1.0], 0.1)[0];
        assert!((rk - 1.105_170_833_333_333_3).abs() < 1e-15);
        assert!((rk - 0.1f64.exp()).abs() < 1e-7);
    }
}
