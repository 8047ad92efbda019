use super::adam::Adam;
use super::model::LinOde;
use crate::dynsys::TrajectorySet;
use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::task::{evaluate, gather_windows, ForecastTask, Forecaster};

/// A forecaster with a flat parameter vector and an exact loss gradient.
pub trait Trainable: Forecaster + Clone {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]) -> Result<()>;
    /// Mean squared error over `batch x horizon x dim` and its gradient.
    fn loss_and_grad(&self, x: &[f64], y: &[f64], batch: usize, horizon: usize) -> Result<(f64, Vec<f64>)>;
}

impl Trainable for LinOde {
    fn params(&self) -> Vec<f64> {
        LinOde::params(self)
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        LinOde::set_params(self, p)
    }

    fn loss_and_grad(&self, x: &[f64], y: &[f64], batch: usize, horizon: usize) -> Result<(f64, Vec<f64>)> {
        LinOde::loss_and_grad(self, x, y, batch, horizon)
    }
}

/// `(horizon_fraction, epoch_fraction)` stages: epoch `e` of `E` trains on
/// the first stage with `e / E < epoch_fraction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum(pub Vec<(f64, f64)>);

impl Default for Curriculum {
    fn default() -> Self {
        Self(vec![(0.125, 0.1), (0.25, 0.2), (0.5, 0.3), (1.0, 1.0)])
    }
}

impl Curriculum {
    /// No warm-up: full horizon throughout.
    pub fn full() -> Self {
        Self(vec![(1.0, 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        let stages = &self.0;
        let ok = !stages.is_empty()
            && stages.iter().all(|&(h, e)| h > 0.0 && h <= 1.0 && e > 0.0 && e <= 1.0)
            && stages.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1)
            && stages.last().map(|s| s.0) == Some(1.0);
        if !ok {
            return Err(Error::Config(format!(
                "curriculum {stages:?} must be nondecreasing, within (0, 1], and end at horizon fraction 1"
            )));
        }
        Ok(())
    }

    /// Horizon used in `epoch` of `epochs` for a full horizon of `full`.
    pub fn horizon(&self, epoch: usize, epochs: usize, full: usize) -> usize {
        let progress = epoch as f64 / epochs.max(1) as f64;
        let frac = self
            .0
            .iter()
            .find(|&&(_, e)| progress < e)
            .map_or(1.0, |&(h, _)| h);
        ((frac * full as f64).ceil() as usize).clamp(1, full)
    }

    /// Parses `h:e,h:e,...` where each part is a decimal or a fraction `p/q`.
    pub fn parse(s: &str) -> Result<Self> {
        let frac = |t: &str| -> Result<f64> {
            let t = t.trim();
            let v = match t.split_once('/') {
                Some((p, q)) => p.trim().parse::<f64>().ok().zip(q.trim().parse::<f64>().ok()).map(|(p, q)| p / q),
                None => t.parse().ok(),
            };
            v.ok_or_else(|| Error::Config(format!("bad curriculum number {t:?}")))
        };
        let stages = s
            .split(',')
            .map(|stage| {
                let (h, e) = stage
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("curriculum stage {stage:?} needs h:e")))?;
                Ok((frac(h)?, frac(e)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let c = Self(stages);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub curriculum: Curriculum,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 64,
            epochs: 10,
            eval_every: 1,
            curriculum: Curriculum::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub horizon: usize,
    pub train_loss: f64,
    /// Present on evaluation epochs.
    pub test_mse: Option<f64>,
    pub test_mae: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Parameters from the evaluation with the lowest test MSE.
    pub model: M,
    pub history: Vec<EpochRecord>,
    /// Training stopped on a non-finite loss.
    pub diverged: bool,
}

impl<M> TrainOutcome<M> {
    pub fn best_test_mse(&self) -> Option<f64> {
        self.history.iter().filter_map(|r| r.test_mse).min_by(f64::total_cmp)
    }

    pub fn best_test_mae(&self) -> Option<f64> {
        self.history.iter().filter_map(|r| r.test_mae).min_by(f64::total_cmp)
    }
}

/// Adam on mini-batches of whole trajectories, shuffled per epoch from
/// `cfg.seed`, with the horizon set by the curriculum.
///
/// The test set is scored every `eval_every` epochs and after the last one;
/// the returned model carries the parameters with the lowest test MSE.
pub fn train<M: Trainable>(
    model: &M,
    train_set: &TrajectorySet,
    test_set: &TrajectorySet,
    task: &ForecastTask,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    cfg.curriculum.validate()?;
    if cfg.batch_size == 0 || cfg.eval_every == 0 {
        return Err(Error::Config("batch_size and eval_every must be positive".into()));
    }
    task.check(train_set)?;
    task.check(test_set)?;
    if train_set.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    let mut current = model.clone();
    let mut params = current.params();
    let mut opt = Adam::new(params.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)?;
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.num_trajectories()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut diverged = false;

    'epochs: for epoch in 0..cfg.epochs {
        let horizon = cfg.curriculum.horizon(epoch, cfg.epochs, task.horizon);
        rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = gather_windows(train_set, idx, task.lookback, horizon);
            let (loss, grad) = match current.loss_and_grad(&x, &y, idx.len(), horizon) {
                Ok(v) => v,
                Err(e) if e.is_numerical() => {
                    log::warn!("epoch {epoch}, batch {b}: {e}; stopping at last finite checkpoint");
                    diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            if !grad.iter().all(|g| g.is_finite()) {
                log::warn!("epoch {epoch}, batch {b}: non-finite gradient; stopping at last finite checkpoint");
                diverged = true;
                break 'epochs;
            }
            opt.step(&mut params, &grad);
            current.set_params(&params)?;
            total += loss;
            batches += 1;
        }
        let mut record = EpochRecord {
            epoch,
            horizon,
            train_loss: total / batches as f64,
            test_mse: None,
            test_mae: None,
        };
        if (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs {
            match evaluate(&current, test_set, task) {
                Ok(m) => {
                    record.test_mse = Some(m.mse);
                    record.test_mae = Some(m.mae);
                    if best.as_ref().is_none_or(|(b, _)| m.mse < *b) {
                        best = Some((m.mse, params.clone()));
                    }
                }
                Err(e) if e.is_numerical() => {
                    log::warn!("epoch {epoch}: {e}; stopping at last finite checkpoint");
                    history.push(record);
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        log::info!(
            "epoch {epoch}: horizon {horizon}, train loss {:.6e}, test mse {:?}",
            record.train_loss,
            record.test_mse
        );
        history.push(record);
    }

    let mut out = model.clone();
    if let Some((_, p)) = best {
        out.set_params(&p)?;
    } else if !history.is_empty() && !diverged {
        out = current;
    }
    Ok(TrainOutcome {
        model: out,
        history,
        diverged,
    })
}
