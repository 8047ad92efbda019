use super::{per_trajectory, GeneratorSpec, Overrides, System, TrajectorySet};
use crate::error::Result;

/// `s_j = sin(freq_a j + phi) + sin(freq_b j + phi)`, `phi ~ U[phase_lo, phase_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinewaveParams {
    pub freq_a: f64,
    pub freq_b: f64,
    pub phase_lo: f64,
    pub phase_hi: f64,
}

impl Default for SinewaveParams {
    fn default() -> Self {
        Self {
            freq_a: 0.2,
            freq_b: 0.3,
            phase_lo: 0.0,
            phase_hi: 1.0,
        }
    }
}

impl SinewaveParams {
    fn from_spec(spec: &GeneratorSpec) -> Result<Self> {
        let d = Self::default();
        let o = Overrides::new(&spec.overrides, &["freq_a", "freq_b", "phase_lo", "phase_hi"])?;
        Ok(Self {
            freq_a: o.get("freq_a", d.freq_a),
            freq_b: o.get("freq_b", d.freq_b),
            phase_lo: o.get("phase_lo", d.phase_lo),
            phase_hi: o.get("phase_hi", d.phase_hi),
        })
    }
}

pub fn sinewave_trajectory(params: &SinewaveParams, phase: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| {
            let j = j as f64;
            (params.freq_a * j + phase).sin() + (params.freq_b * j + phase).sin()
        })
        .collect()
}

pub fn gen_sinewave(spec: &GeneratorSpec, workers: usize) -> Result<TrajectorySet> {
    spec.validate(System::Sinewave)?;
    let params = SinewaveParams::from_spec(spec)?;
    per_trajectory(spec, 1, workers, |_, mut rng| {
        let phase = rng.uniform(params.phase_lo, params.phase_hi)?;
        Ok(sinewave_trajectory(&params, phase, spec.traj_len))
    })
}
