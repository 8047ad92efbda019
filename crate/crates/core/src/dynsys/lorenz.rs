use super::{euler_step, per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub center: [f64; 3],
    /// Standard deviation of the Gaussian IC perturbation.
    pub ic_scale: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            center: [0.0, -0.01, 9.0],
            ic_scale: 0.001,
        }
    }
}

impl LorenzParams {
    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &["sigma", "rho", "beta", "dt", "ic_scale"])?;
        Ok(Self {
            sigma: o.get("sigma", d.sigma),
            rho: o.get("rho", d.rho),
            beta: o.get("beta", d.beta),
            dt: o.get("dt", d.dt),
            center: d.center,
            ic_scale: o.get("ic_scale", d.ic_scale),
        })
    }

    pub fn field(&self, s: &[f64]) -> Vec<f64> {
        let (x, y, z) = (s[0], s[1], s[2]);
        vec![
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }
}

/// Euler rollout of `len` frames, flattened row-major (`len x 3`).
pub fn lorenz_rollout(params: &LorenzParams, ic: [f64; 3], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len * 3);
    let mut s = ic.to_vec();
    for step in 0..len {
        out.extend_from_slice(&s);
        if step + 1 < len {
            s = euler_step(|x: &[f64]| params.field(x), &s, params.dt);
        }
    }
    out
}

pub fn gen_lorenz(spec: &GeneratorSpec, workers: usize) -> Result<TrajectorySet> {
    spec.validate(System::Lorenz)?;
    let params = LorenzParams::from_spec(spec)?;
    per_trajectory(spec, 3, workers, |_, mut rng| {
        let mut ic = params.center;
        for c in &mut ic {
            *c += params.ic_scale * rng.normal();
        }
        Ok(lorenz_rollout(&params, ic, spec.traj_len))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_fixed() {
        let out = lorenz_rollout(&LorenzParams::default(), [0.0; 3], 100);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_euler_step_by_hand() {
        let out = lorenz_rollout(&LorenzParams::default(), [0.0, -0.01, 9.0], 2);
        let expected = [-0.001, -0.0099, 8.76];
        for (got, want) in out[3..].iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn default_trajectories_stay_bounded() {
        let spec = GeneratorSpec::new(System::Lorenz).with_counts(8, 0).with_seed(3);
        let set = gen_lorenz(&spec, 2).unwrap();
        assert!(set.data().iter().all(|v| v.abs() < 100.0));
    }
}
