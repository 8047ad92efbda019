use std::f64::consts::PI;

use super::{per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::{Error, Result};
use crate::numkit::{Complex64, Spectral1d};

/// `u_t = -u_xx - u_xxxx - u_x^2 / 2` on a periodic grid over `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsParams {
    /// Saved grid points per frame.
    pub points: usize,
    /// Solver nodes per saved point; the solver grid has `points * oversample` nodes.
    pub oversample: usize,
    pub length: f64,
    pub dt: f64,
    /// Solver steps between saved frames.
    pub save_every: usize,
    pub weight_lo: f64,
    pub weight_hi: f64,
}

impl Default for KsParams {
    fn default() -> Self {
        Self {
            points: 100,
            oversample: 2,
            length: 200.0,
            dt: 0.01,
            save_every: 20,
            weight_lo: -1.0,
            weight_hi: 1.0,
        }
    }
}

impl KsParams {
    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &["dt", "save_every", "oversample", "weight_lo", "weight_hi"])?;
        let count = |key: &str, default: usize| -> Result<usize> {
            let v = o.get(key, default as f64);
            if !(v >= 1.0) || v.fract() != 0.0 {
                return Err(Error::Config(format!("{key} must be a positive integer, got {v}")));
            }
            Ok(v as usize)
        };
        Ok(Self {
            dt: o.get("dt", d.dt),
            save_every: count("save_every", d.save_every)?,
            oversample: count("oversample", d.oversample)?,
            weight_lo: o.get("weight_lo", d.weight_lo),
            weight_hi: o.get("weight_hi", d.weight_hi),
            ..d
        })
    }

    pub fn solver_points(&self) -> usize {
        self.points * self.oversample
    }

    /// Saved grid; every `oversample`-th solver node.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.points)
            .map(|j| self.length * j as f64 / self.points as f64)
            .collect()
    }

    pub fn solver_grid(&self) -> Vec<f64> {
        let n = self.solver_points();
        (0..n).map(|j| self.length * j as f64 / n as f64).collect()
    }

    /// `sum_i (w[2i] sin(y_i) + w[2i+1] cos(y_i))` with `y_i = x pi / {32, 16, 8, 4}`,
    /// on the solver grid.
    pub fn initial_condition(&self, weights: &[f64; 8]) -> Vec<f64> {
        self.solver_grid()
            .into_iter()
            .map(|x| {
                [32.0, 16.0, 8.0, 4.0]
                    .iter()
                    .enumerate()
                    .map(|(i, div)| {
                        let y = x * PI / div;
                        weights[2 * i] * y.sin() + weights[2 * i + 1] * y.cos()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Pseudo-spectral RK4 integrator with 2/3-rule dealiasing of the quadratic term.
pub struct KsSolver {
    fft: Spectral1d,
    dt: f64,
    linear: Vec<f64>,
    ik: Vec<Complex64>,
    keep: Vec<bool>,
    uhat: Vec<Complex64>,
}

impl KsSolver {
    pub fn new(params: &KsParams) -> Result<Self> {
        if !(params.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", params.dt)));
        }
        if params.points == 0 || params.oversample == 0 {
            return Err(Error::Config("KS grid needs at least one point".into()));
        }
        let n = params.solver_points();
        let fft = Spectral1d::new(n)?;
        let cutoff = n as f64 / 3.0;
        let mut linear = Vec::with_capacity(n);
        let mut ik = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        for b in 0..n {
            let m = fft.mode(b);
            let k = 2.0 * PI * m as f64 / params.length;
            linear.push(k * k - k.powi(4));
            let nyquist = n.is_multiple_of(2) && b == n / 2;
            ik.push(if nyquist { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) });
            keep.push((m.unsigned_abs() as f64) < cutoff);
        }
        Ok(Self {
            fft,
            dt: params.dt,
            linear,
            ik,
            keep,
            uhat: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn set_state(&mut self, u: &[f64]) {
        assert_eq!(u.len(), self.uhat.len());
        for (h, &v) in self.uhat.iter_mut().zip(u) {
            *h = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut self.uhat);
    }

    pub fn state(&self) -> Vec<f64> {
        let mut buf = self.uhat.clone();
        self.fft.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn rhs(&self, uhat: &[Complex64]) -> Vec<Complex64> {
        // Band-limiting the factor as well as the product keeps aliased products out of kept modes.
        let mut ux: Vec<Complex64> = uhat
            .iter()
            .zip(&self.ik)
            .zip(&self.keep)
            .map(|((u, ik), &keep)| if keep { u * ik } else { Complex64::new(0.0, 0.0) })
            .collect();
        self.fft.inverse(&mut ux);
        let mut nl: Vec<Complex64> = ux.iter().map(|v| Complex64::new(v.re * v.re, 0.0)).collect();
        self.fft.forward(&mut nl);
        uhat.iter()
            .zip(&nl)
            .enumerate()
            .map(|(b, (u, n))| {
                let quad = if self.keep[b] { -0.5 * n } else { Complex64::new(0.0, 0.0) };
                u * self.linear[b] + quad
            })
            .collect()
    }

    pub fn step(&mut self) {
        let dt = self.dt;
        let axpy = |a: &[Complex64], s: f64, b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rhs(&self.uhat);
        let k2 = self.rhs(&axpy(&self.uhat, dt / 2.0, &k1));
        let k3 = self.rhs(&axpy(&self.uhat, dt / 2.0, &k2));
        let k4 = self.rhs(&axpy(&self.uhat, dt, &k3));
        for b in 0..self.uhat.len() {
            self.uhat[b] += (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b]) * (dt / 6.0);
        }
    }

    /// Spatial mean of the current field.
    pub fn mean(&self) -> f64 {
        self.uhat[0].re / self.uhat.len() as f64
    }
}

/// Rolls out `frames` saved frames from `ic`, given on the solver grid. Each
/// frame keeps every `oversample`-th node; frame 0 is `ic` restricted that way.
pub fn ks_rollout(params: &KsParams, ic: &[f64], frames: usize) -> Result<Vec<f64>> {
    if ic.len() != params.solver_points() {
        return Err(Error::Shape(format!(
            "KS initial condition has {} values, solver grid has {}",
            ic.len(),
            params.solver_points()
        )));
    }
    let mut solver = KsSolver::new(params)?;
    solver.set_state(ic);
    let mut out = Vec::with_capacity(frames * params.points);
    out.extend(ic.iter().step_by(params.oversample));
    for frame in 1..frames {
        for _ in 0..params.save_every {
            solver.step();
        }
        let u = solver.state();
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("ks_pde: non-finite state at step {}", frame * params.save_every)));
        }
        out.extend(u.into_iter().step_by(params.oversample));
    }
    Ok(out)
}

pub fn gen_ks(spec: &GeneratorSpec, workers: usize) -> Result<TrajectorySet> {
    spec.validate(System::KsPde)?;
    let params = KsParams::from_spec(spec)?;
    per_trajectory(spec, params.points, workers, |i, mut rng| {
        let mut w = [0.0; 8];
        for v in &mut w {
            *v = rng.uniform(params.weight_lo, params.weight_hi)?;
        }
        let ic = params.initial_condition(&w);
        ks_rollout(&params, &ic, spec.traj_len).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("trajectory {i}: {msg}")),
            other => other,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stays_zero() {
        let p = KsParams::default();
        let out = ks_rollout(&p, &vec![0.0; p.solver_points()], 5).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_zero_is_ic() {
        let p = KsParams::default();
        let ic = p.initial_condition(&[0.3, -0.2, 0.5, 0.1, -0.7, 0.9, 0.0, 0.4]);
        let out = ks_rollout(&p, &ic, 3).unwrap();
        let saved: Vec<f64> = ic.iter().step_by(2).copied().collect();
        assert_eq!(&out[..100], &saved[..]);
    }

    #[test]
    fn single_mode_decays_or_grows_at_linear_rate() {
        // Amplitude small enough that the quadratic term is negligible.
        let p = KsParams::default();
        let k = 2.0 * PI * 10.0 / 200.0;
        let ic: Vec<f64> = p.solver_grid().iter().map(|x| 1e-8 * (k * x).cos()).collect();
        let mut solver = KsSolver::new(&p).unwrap();
        solver.set_state(&ic);
        for _ in 0..100 {
            solver.step();
        }
        let growth = ((k * k - k.powi(4)) * 1.0).exp();
        let u = solver.state();
        assert!((u[0] / 1e-8 - growth).abs() < 1e-6);
    }

    #[test]
    fn mean_does_not_increase() {
        let p = KsParams::default();
        let ic = p.initial_condition(&[0.5, -0.5, 0.3, 0.2, -0.4, 0.6, 0.1, -0.9]);
        let mut solver = KsSolver::new(&p).unwrap();
        solver.set_state(&ic);
        let start = solver.mean();
        for _ in 0..2000 {
            solver.step();
        }
        assert!(solver.mean() <= start + 1e-3);
    }

    #[test]
    fn amplitude_stays_physical() {
        let p = KsParams::default();
        let ic = p.initial_condition(&[0.5, -0.5, 0.3, 0.2, -0.4, 0.6, 0.1, -0.9]);
        let out = ks_rollout(&p, &ic, 1000).unwrap();
        let dx = p.length / p.points as f64;
        let frame = &out[out.len() - p.points..];
        let slope = (0..p.points)
            .map(|j| (frame[(j + 1) % p.points] - frame[j]).abs() / dx)
            .fold(0.0, f64::max);
        assert!(slope < 10.0, "max slope {slope}");
    }

    #[test]
    fn rejects_ic_on_wrong_grid() {
        assert!(ks_rollout(&KsParams::default(), &[0.0; 100], 2).is_err());
    }
}
