use super::{per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::{Error, Result};

/// `y' = beta y(t - tau) / (1 + y(t - tau)^n) - gamma y(t)`, Euler with step `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MackeyGlassParams {
    pub tau: f64,
    pub dt: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: f64,
    pub history_lo: f64,
    pub history_hi: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            tau: 25.0,
            dt: 0.1,
            beta: 0.2,
            gamma: 0.1,
            n: 10.0,
            history_lo: 1.19,
            history_hi: 1.21,
        }
    }
}

impl MackeyGlassParams {
    const KEYS: [&'static str; 7] = ["tau", "dt", "beta", "gamma", "n", "history_lo", "history_hi"];

    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &Self::KEYS)?;
        let p = Self {
            tau: o.get("tau", d.tau),
            dt: o.get("dt", d.dt),
            beta: o.get("beta", d.beta),
            gamma: o.get("gamma", d.gamma),
            n: o.get("n", d.n),
            history_lo: o.get("history_lo", d.history_lo),
            history_hi: o.get("history_hi", d.history_hi),
        };
        if !(p.dt > 0.0) || !(p.tau >= p.dt) {
            return Err(Error::Config(format!("need tau >= dt > 0, got tau={} dt={}", p.tau, p.dt)));
        }
        Ok(p)
    }

    /// Samples in the history buffer: `round(tau / dt)`.
    pub fn history_len(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }
}

/// Integrates from `history`, which holds `y(-tau) .. y(-dt)` in order; `y(0)`
/// is taken equal to the last history sample. Returns `y(0) .. y((len-1) dt)`.
pub fn mackey_glass_rollout(params: &MackeyGlassParams, history: &[f64], len: usize) -> Vec<f64> {
    assert!(!history.is_empty(), "history must be non-empty");
    let lag = history.len();
    let mut full = Vec::with_capacity(lag + len);
    full.extend_from_slice(history);
    let mut y = history[lag - 1];
    for step in 0..len {
        full.push(y);
        if step + 1 == len {
            break;
        }
        // full[step] holds y(t_step - tau).
        let delayed = full[step];
        let dy = params.beta * delayed / (1.0 + delayed.powf(params.n)) - params.gamma * y;
        y += params.dt * dy;
    }
    full.split_off(lag)
}

pub fn gen_mackey_glass(spec: &GeneratorSpec, workers: usize) -> Result<TrajectorySet> {
    spec.validate(System::MackeyGlass)?;
    let params = MackeyGlassParams::from_spec(spec)?;
    let lag = params.history_len();
    per_trajectory(spec, 1, workers, |_, mut rng| {
        let history = (0..lag)
            .map(|_| rng.uniform(params.history_lo, params.history_hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(mackey_glass_rollout(&params, &history, spec.traj_len))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_at_one() {
        let p = MackeyGlassParams::default();
        let y = mackey_glass_rollout(&p, &[1.0; 250], 3000);
        assert!(y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn one_step_from_constant_history() {
        let p = MackeyGlassParams::default();
        let y = mackey_glass_rollout(&p, &[1.2; 250], 2);
        let expected = 1.2 + 0.1 * (0.24 / (1.0 + 1.2f64.powi(10)) - 0.12);
        assert_eq!(y[0], 1.2);
        assert!((y[1] - expected).abs() < 1e-15);
        assert!((y[1] - 1.191_337_2).abs() < 1e-7);
    }

    #[test]
    fn delay_reads_history_in_order() {
        let p = MackeyGlassParams {
            tau: 0.2,
            ..Default::default()
        };
        // history y(-0.2)=2, y(-0.1)=0; y(0)=0 so only the delayed term moves it.
        let y = mackey_glass_rollout(&p, &[2.0, 0.0], 2);
        let expected = 0.1 * 0.2 * 2.0 / (1.0 + 2.0f64.powi(10));
        assert!((y[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn distinct_trajectories_get_distinct_histories() {
        let spec = GeneratorSpec::new(System::MackeyGlass).with_counts(2, 0).with_traj_len(10);
        let set = gen_mackey_glass(&spec, 1).unwrap();
        assert_ne!(set.trajectory(0), set.trajectory(1));
    }
}
