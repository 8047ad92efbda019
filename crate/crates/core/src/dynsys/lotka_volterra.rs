use std::sync::atomic::{AtomicUsize, Ordering};

use super::{per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::{Error, Result};
use crate::numkit::Rng;

/// `x' = alpha x - beta x y`, `y' = delta x y - gamma y`, Euler with step `dt`.
///
/// With noise on, `alpha` is redrawn from `U[1 - alpha_jitter, 1 + alpha_jitter]`
/// every step; otherwise `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LotkaVolterraParams {
    pub alpha_jitter: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub dt: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub max_attempts: usize,
}

impl Default for LotkaVolterraParams {
    fn default() -> Self {
        Self {
            alpha_jitter: 0.002,
            beta: 0.1,
            delta: 0.02,
            gamma: 0.5,
            dt: 0.01,
            x_range: (50.0, 150.0),
            y_range: (10.0, 30.0),
            max_attempts: 64,
        }
    }
}

impl LotkaVolterraParams {
    const KEYS: [&'static str; 9] = [
        "alpha_jitter", "beta", "delta", "gamma", "dt", "x_lo", "x_hi", "y_lo", "y_hi",
    ];

    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &Self::KEYS)?;
        Ok(Self {
            alpha_jitter: o.get("alpha_jitter", d.alpha_jitter),
            beta: o.get("beta", d.beta),
            delta: o.get("delta", d.delta),
            gamma: o.get("gamma", d.gamma),
            dt: o.get("dt", d.dt),
            x_range: (o.get("x_lo", d.x_range.0), o.get("x_hi", d.x_range.1)),
            y_range: (o.get("y_lo", d.y_range.0), o.get("y_hi", d.y_range.1)),
            max_attempts: d.max_attempts,
        })
    }

    /// Coexistence fixed point `(gamma / delta, alpha / beta)` at `alpha = 1`.
    pub fn fixed_point(&self) -> (f64, f64) {
        (self.gamma / self.delta, 1.0 / self.beta)
    }
}

/// Euler rollout of `len` frames (`len x 2`, row-major). `noise` supplies the
/// per-step `alpha` draws; `None` fixes `alpha = 1`. Returns `Ok(None)` once
/// either population reaches zero or below.
pub fn lv_rollout(
    params: &LotkaVolterraParams,
    ic: (f64, f64),
    len: usize,
    mut noise: Option<&mut Rng>,
) -> Result<Option<Vec<f64>>> {
    let (mut x, mut y) = ic;
    let mut out = Vec::with_capacity(len * 2);
    for step in 0..len {
        if !(x > 0.0 && y > 0.0) {
            return Ok(None);
        }
        out.push(x);
        out.push(y);
        if step + 1 == len {
            break;
        }
        let alpha = match noise.as_deref_mut() {
            Some(rng) => rng.uniform(1.0 - params.alpha_jitter, 1.0 + params.alpha_jitter)?,
            None => 1.0,
        };
        let dx = alpha * x - params.beta * x * y;
        let dy = params.delta * x * y - params.gamma * y;
        x += params.dt * dx;
        y += params.dt * dy;
    }
    Ok(Some(out))
}

/// Returns the set and the number of regenerated trajectories.
pub fn gen_lotka_volterra(spec: &GeneratorSpec, workers: usize) -> Result<(TrajectorySet, usize)> {
    spec.validate(System::LotkaVolterra)?;
    let params = LotkaVolterraParams::from_spec(spec)?;
    let regenerated = AtomicUsize::new(0);
    let set = per_trajectory(spec, 2, workers, |i, rng| {
        // Attempt k > 0 draws from a sub-stream of the trajectory's own stream.
        let base = rng.state();
        let mut rng = rng;
        for attempt in 0..params.max_attempts {
            if attempt > 0 {
                rng = Rng::for_stream(base, attempt as u64);
            }
            let ic = (
                rng.uniform(params.x_range.0, params.x_range.1)?,
                rng.uniform(params.y_range.0, params.y_range.1)?,
            );
            let noise = spec.noise_enabled.then_some(&mut rng);
            if let Some(traj) = lv_rollout(&params, ic, spec.traj_len, noise)? {
                return Ok(traj);
            }
            regenerated.fetch_add(1, Ordering::Relaxed);
            log::warn!("lotka_volterra trajectory {i}: population underflow, regenerating (attempt {})", attempt + 1);
        }
        Err(Error::Numerical(format!(
            "lotka_volterra trajectory {i}: population underflow in all {} attempts",
            params.max_attempts
        )))
    })?;
    Ok((set, regenerated.into_inner()))
}
