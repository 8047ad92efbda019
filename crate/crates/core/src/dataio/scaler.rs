use crate::dynsys::TrajectorySet;
use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Per-dimension standardization with population statistics; `std >= 1e-8`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(train: &TrajectorySet) -> Result<Self> {
        if train.is_empty() || train.traj_len() == 0 {
            return Err(Error::Shape("cannot fit a scaler on an empty set".into()));
        }
        let d = train.dim();
        let count = (train.data().len() / d) as f64;
        let mut mean = vec![0.0; d];
        for s in train.data().chunks_exact(d) {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; d];
        for s in train.data().chunks_exact(d) {
            for k in 0..d {
                var[k] += (s[k] - mean[k]).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / count).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_state(&self, state: &mut [f64], direction: Direction) {
        for ((v, m), s) in state.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = match direction {
                Direction::Forward => (*v - m) / s,
                Direction::Inverse => *v * s + m,
            };
        }
    }

    pub fn apply(&self, set: &TrajectorySet, direction: Direction) -> Result<TrajectorySet> {
        if set.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "scaler has {} dims, set has {}",
                self.dim(),
                set.dim()
            )));
        }
        let mut out = set.clone();
        out.map_states(|s| self.apply_state(s, direction));
        Ok(out)
    }
}
