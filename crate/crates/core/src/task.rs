//! Lookback/horizon splits, the forecaster interface and error metrics.

use rayon::prelude::*;

use crate::dynsys::TrajectorySet;
use crate::error::{Error, Result};

/// Split of each trajectory into a lookback of `lookback` steps followed by
/// `horizon` target steps; `lookback + horizon` equals the trajectory length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForecastTask {
    pub dataset: String,
    pub lookback: usize,
    pub horizon: usize,
}

impl ForecastTask {
    pub fn new(dataset: impl Into<String>, lookback: usize, traj_len: usize) -> Result<Self> {
        if lookback == 0 || lookback >= traj_len {
            return Err(Error::Config(format!(
                "lookback {lookback} must be in 1..{traj_len} for trajectories of length {traj_len}"
            )));
        }
        Ok(Self {
            dataset: dataset.into(),
            lookback,
            horizon: traj_len - lookback,
        })
    }

    pub fn traj_len(&self) -> usize {
        self.lookback + self.horizon
    }

    pub fn check(&self, set: &TrajectorySet) -> Result<()> {
        if set.traj_len() < self.traj_len() {
            return Err(Error::Shape(format!(
                "task needs {} steps, trajectories have {}",
                self.traj_len(),
                set.traj_len()
            )));
        }
        Ok(())
    }
}

/// A model mapping lookback windows to multi-step forecasts.
///
/// Windows are passed as `batch x lookback x dim` row-major buffers and
/// forecasts returned as `batch x horizon x dim`.
pub trait Forecaster: Sync {
    fn lookback(&self) -> usize;
    fn dim(&self) -> usize;
    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>>;
    fn param_count(&self) -> usize;
}

/// Gathers `(X, Y)` buffers for the given trajectory indices: the first
/// `lookback` steps and the `horizon` steps after them.
pub fn gather_windows(
    set: &TrajectorySet,
    indices: &[usize],
    lookback: usize,
    horizon: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = set.dim();
    let mut x = Vec::with_capacity(indices.len() * lookback * d);
    let mut y = Vec::with_capacity(indices.len() * horizon * d);
    for &i in indices {
        let traj = set.trajectory(i);
        x.extend_from_slice(&traj[..lookback * d]);
        y.extend_from_slice(&traj[lookback * d..(lookback + horizon) * d]);
    }
    (x, y)
}

fn check_same_len(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_same_len(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_same_len(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

/// Trajectories per evaluation chunk; fixed so sums do not depend on threads.
const EVAL_CHUNK: usize = 128;

/// Forecasts every trajectory of `set` from its first `task.lookback` steps
/// and scores the next `task.horizon` steps.
///
/// Chunks run in parallel; partial sums are reduced in chunk order.
pub fn evaluate<F: Forecaster + ?Sized>(model: &F, set: &TrajectorySet, task: &ForecastTask) -> Result<Metrics> {
    task.check(set)?;
    if model.lookback() != task.lookback || model.dim() != set.dim() {
        return Err(Error::Shape(format!(
            "model expects lookback {} dim {}, task has lookback {} dim {}",
            model.lookback(),
            model.dim(),
            task.lookback,
            set.dim()
        )));
    }
    let m = set.num_trajectories();
    if m == 0 {
        return Err(Error::Shape("cannot evaluate on an empty set".into()));
    }
    let chunks: Vec<Vec<usize>> = (0..m)
        .collect::<Vec<_>>()
        .chunks(EVAL_CHUNK)
        .map(<[usize]>::to_vec)
        .collect();
    let partial = chunks
        .par_iter()
        .map(|idx| -> Result<(f64, f64)> {
            let (x, y) = gather_windows(set, idx, task.lookback, task.horizon);
            let pred = model.forecast(&x, idx.len(), task.horizon)?;
            check_same_len(&pred, &y)?;
            let sq = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>();
            let ab = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).sum::<f64>();
            Ok((sq, ab))
        })
        .collect::<Vec<_>>();
    let (mut sq, mut ab) = (0.0, 0.0);
    for p in partial {
        let (s, a) = p?;
        sq += s;
        ab += a;
    }
    let n = (m * task.horizon * set.dim()) as f64;
    let metrics = Metrics { mse: sq / n, mae: ab / n };
    if !metrics.mse.is_finite() {
        return Err(Error::Numerical(format!("non-finite test MSE on {}", task.dataset)));
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_metrics() {
        assert_eq!(mse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(mae(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(mse(&[3.0], &[3.0]).unwrap(), 0.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn task_bounds() {
        assert_eq!(ForecastTask::new("x", 96, 2000).unwrap().horizon, 1904);
        assert!(ForecastTask::new("x", 0, 10).is_err());
        assert!(ForecastTask::new("x", 10, 10).is_err());
    }

    #[test]
    fn gather_layout() {
        let set = TrajectorySet::new((2, 3, 1), vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0], None).unwrap();
        let (x, y) = gather_windows(&set, &[1, 0], 2, 1);
        assert_eq!(x, vec![10.0, 11.0, 0.0, 1.0]);
        assert_eq!(y, vec![12.0, 2.0]);
    }
}
