use std::f64::consts::PI;

use super::{per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::{Error, Result};
use crate::numkit::{Complex64, Fft2};

/// `c_t = lap(c^3 - c - epsilon lap c)` on a periodic `grid x grid` mesh over
/// the unit square, observed on a `sub x sub` uniform subgrid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CahnHilliardParams {
    pub grid: usize,
    pub sub: usize,
    pub epsilon: f64,
    pub dt: f64,
    pub ic_amplitude: f64,
}

impl Default for CahnHilliardParams {
    fn default() -> Self {
        Self {
            grid: 64,
            sub: 16,
            epsilon: 1e-4,
            dt: 5e-6,
            ic_amplitude: 0.05,
        }
    }
}

impl CahnHilliardParams {
    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &["epsilon", "dt", "ic_amplitude"])?;
        Ok(Self {
            epsilon: o.get("epsilon", d.epsilon),
            dt: o.get("dt", d.dt),
            ic_amplitude: o.get("ic_amplitude", d.ic_amplitude),
            ..d
        })
    }

    pub fn stride(&self) -> usize {
        self.grid / self.sub
    }
}

/// Semi-implicit spectral stepper: stiff fourth-order term implicit, the
/// cubic chemical potential explicit. The state lives in Fourier space, so
/// the zero mode (the mean) is never modified.
pub struct CahnHilliardSolver {
    fft: Fft2,
    grid: usize,
    dt: f64,
    k2: Vec<f64>,
    denom: Vec<f64>,
    chat: Vec<Complex64>,
}

impl CahnHilliardSolver {
    pub fn new(params: &CahnHilliardParams) -> Result<Self> {
        if !(params.dt > 0.0) || params.grid == 0 || params.sub == 0 || !params.grid.is_multiple_of(params.sub) {
            return Err(Error::Config(format!("invalid Cahn-Hilliard parameters {params:?}")));
        }
        let n = params.grid;
        let fft = Fft2::new(n, n)?;
        let mut k2 = Vec::with_capacity(n * n);
        let mut denom = Vec::with_capacity(n * n);
        for r in 0..n {
            let kr = 2.0 * PI * fft.row_mode(r) as f64;
            for c in 0..n {
                let kc = 2.0 * PI * fft.col_mode(c) as f64;
                let kk = kr * kr + kc * kc;
                k2.push(kk);
                denom.push(1.0 + params.dt * params.epsilon * kk * kk);
            }
        }
        Ok(Self {
            fft,
            grid: n,
            dt: params.dt,
            k2,
            denom,
            chat: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn set_field(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.chat.len());
        for (h, &v) in self.chat.iter_mut().zip(c) {
            *h = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut self.chat);
    }

    /// Full `grid x grid` field, row-major.
    pub fn field(&self) -> Vec<f64> {
        let mut buf = self.chat.clone();
        self.fft.inverse(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }

    pub fn mean(&self) -> f64 {
        self.chat[0].re / self.chat.len() as f64
    }

    pub fn step(&mut self) {
        let mut mu: Vec<Complex64> = self
            .field()
            .into_iter()
            .map(|c| Complex64::new(c * c * c - c, 0.0))
            .collect();
        self.fft.forward(&mut mu);
        let dt = self.dt;
        for (((c, m), k2), denom) in self.chat.iter_mut().zip(&mu).zip(&self.k2).zip(&self.denom) {
            *c = (*c - m * (dt * k2)) / denom;
        }
    }

    /// Every `stride`-th grid point in both directions, row-major.
    pub fn subgrid(&self, field: &[f64], stride: usize) -> Vec<f64> {
        let n = self.grid;
        (0..n)
            .step_by(stride)
            .flat_map(|r| (0..n).step_by(stride).map(move |c| field[r * n + c]))
            .collect()
    }
}

pub fn gen_cahn_hilliard(spec: &GeneratorSpec, workers: usize) -> Result<TrajectorySet> {
    spec.validate(System::CahnHilliard)?;
    let params = CahnHilliardParams::from_spec(spec)?;
    let stride = params.stride();
    per_trajectory(spec, params.sub * params.sub, workers, |i, mut rng| {
        let mut solver = CahnHilliardSolver::new(&params)?;
        let amp = params.ic_amplitude;
        let ic = (0..params.grid * params.grid)
            .map(|_| rng.uniform(-amp, amp))
            .collect::<Result<Vec<_>>>()?;
        let mut out = solver.subgrid(&ic, stride);
        solver.set_field(&ic);
        for step in 1..spec.traj_len {
            solver.step();
            let frame = solver.subgrid(&solver.field(), stride);
            if frame.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "cahn_hilliard trajectory {i}: non-finite state at step {step}"
                )));
            }
            out.extend(frame);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_is_stationary() {
        let mut s = CahnHilliardSolver::new(&CahnHilliardParams::default()).unwrap();
        s.set_field(&vec![0.3; 64 * 64]);
        for _ in 0..20 {
            s.step();
        }
        assert!(s.field().iter().all(|v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn subgrid_picks_stride_points() {
        let s = CahnHilliardSolver::new(&CahnHilliardParams::default()).unwrap();
        let field: Vec<f64> = (0..64 * 64).map(|v| v as f64).collect();
        let sub = s.subgrid(&field, 4);
        assert_eq!(sub.len(), 256);
        assert_eq!(sub[0], 0.0);
        assert_eq!(sub[1], 4.0);
        assert_eq!(sub[16], (4 * 64) as f64);
    }

    #[test]
    fn mean_is_conserved() {
        let spec = GeneratorSpec::new(System::CahnHilliard);
        let params = CahnHilliardParams::from_spec(&spec).unwrap();
        let mut rng = crate::numkit::Rng::new(9);
        let ic: Vec<f64> = (0..64 * 64).map(|_| rng.uniform(-0.05, 0.05).unwrap()).collect();
        let mut s = CahnHilliardSolver::new(&params).unwrap();
        s.set_field(&ic);
        let m0 = ic.iter().sum::<f64>() / ic.len() as f64;
        for _ in 0..50 {
            s.step();
            let f = s.field();
            let m = f.iter().sum::<f64>() / f.len() as f64;
            assert!((m - m0).abs() < 1e-12);
        }
    }
}
