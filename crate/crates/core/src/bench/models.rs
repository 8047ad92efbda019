use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{FitWindows, LatentNLinear, LatentNLinearConfig, NLinear, NLinearVariant, Persistence};
use crate::dataio::{Checkpoint, DatasetContainer, Direction, StandardScaler};
use crate::dynsys::TrajectorySet;
use crate::error::{Error, FormatError, Result};
use crate::linode::{train, Curriculum, EpochRecord, GradMemory, LinOde, LinOdeConfig, TrainConfig};
use crate::matexp::GeneratorClass;
use crate::numkit::Rng;
use crate::task::{evaluate, ForecastTask, Forecaster, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum ModelKind {
    Linode,
    LinodeDde,
    Nlinear,
    NlinearB,
    LatentNlinear,
    Persistence,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linode => "linode",
            ModelKind::LinodeDde => "linode-dde",
            ModelKind::Nlinear => "nlinear",
            ModelKind::NlinearB => "nlinear-b",
            ModelKind::LatentNlinear => "latent-nlinear",
            ModelKind::Persistence => "persistence",
        }
    }

    fn trained(self) -> bool {
        matches!(self, ModelKind::Linode | ModelKind::LinodeDde | ModelKind::LatentNlinear)
    }
}

/// Model and training settings; field names match the CLI flags and the
/// benchmark config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Report label; defaults to the kind name.
    pub label: Option<String>,
    pub lambda: f64,
    /// Fit NLinear on every window at this stride instead of one per trajectory.
    pub fit_stride: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub eval_every: usize,
    /// `h:e,h:e,...`; see [`Curriculum::parse`].
    pub curriculum: Option<String>,
    pub seed: u64,
    pub latent_dim: Option<usize>,
    pub generator: GeneratorClass,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Option<Vec<usize>>,
    pub delay: Option<f64>,
    pub step_unit: f64,
    pub memory: GradMemory,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::new(ModelKind::Nlinear)
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            label: None,
            lambda: 1e-6,
            fit_stride: None,
            epochs: 10,
            learning_rate: 1e-3,
            batch_size: 64,
            eval_every: 1,
            curriculum: None,
            seed: 0,
            latent_dim: None,
            generator: GeneratorClass::SkewPlusDiag,
            encoder_hidden: Vec::new(),
            decoder_hidden: None,
            delay: None,
            step_unit: 1.0,
            memory: GradMemory::StoreStates,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            eval_every: self.eval_every,
            curriculum: match &self.curriculum {
                Some(s) => Curriculum::parse(s)?,
                None => Curriculum::default(),
            },
            seed: self.seed,
            ..TrainConfig::default()
        })
    }

    fn linode_config(&self) -> LinOdeConfig {
        let delay = match self.kind {
            ModelKind::LinodeDde => Some(self.delay.unwrap_or(1.0)),
            _ => None,
        };
        LinOdeConfig {
            latent_dim: self.latent_dim.unwrap_or(50),
            generator: self.generator,
            encoder_hidden: self.encoder_hidden.clone(),
            decoder_hidden: self.decoder_hidden.clone().unwrap_or_else(|| vec![64]),
            delay,
            step_unit: self.step_unit,
            memory: self.memory,
            ..LinOdeConfig::default()
        }
    }

    fn latent_nlinear_config(&self) -> LatentNLinearConfig {
        LatentNLinearConfig {
            latent_dim: self.latent_dim.unwrap_or(2),
            encoder_hidden: self.encoder_hidden.clone(),
            decoder_hidden: self.decoder_hidden.clone().unwrap_or_default(),
        }
    }
}

/// Any of the supported forecasters.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Linode(LinOde),
    Nlinear(NLinear),
    LatentNlinear(LatentNLinear),
    Persistence(Persistence),
}

impl AnyModel {
    fn inner(&self) -> &dyn Forecaster {
        match self {
            AnyModel::Linode(m) => m,
            AnyModel::Nlinear(m) => m,
            AnyModel::LatentNlinear(m) => m,
            AnyModel::Persistence(m) => m,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            AnyModel::Linode(m) => m.to_checkpoint(),
            AnyModel::Nlinear(m) => m.to_checkpoint(),
            AnyModel::LatentNlinear(m) => m.to_checkpoint(),
            AnyModel::Persistence(m) => Checkpoint {
                metadata: [
                    ("model".to_string(), "persistence".to_string()),
                    ("lookback".to_string(), m.lookback.to_string()),
                    ("dim".to_string(), m.dim.to_string()),
                ]
                .into_iter()
                .collect(),
                groups: Vec::new(),
            },
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        match ckpt.meta("model")? {
            "linode" => Ok(AnyModel::Linode(LinOde::from_checkpoint(ckpt)?)),
            "nlinear" => Ok(AnyModel::Nlinear(NLinear::from_checkpoint(ckpt)?)),
            "latent_nlinear" => Ok(AnyModel::LatentNlinear(LatentNLinear::from_checkpoint(ckpt)?)),
            "persistence" => {
                let num = |k: &str| -> Result<usize> {
                    ckpt.meta(k)?
                        .parse()
                        .map_err(|_| FormatError::BadMetadata(format!("bad {k}")).into())
                };
                Ok(AnyModel::Persistence(Persistence::new(num("lookback")?, num("dim")?)?))
            }
            other => Err(FormatError::BadMetadata(format!("unknown model {other:?}")).into()),
        }
    }
}

impl Forecaster for AnyModel {
    fn lookback(&self) -> usize {
        self.inner().lookback()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>> {
        self.inner().forecast(windows, batch, horizon)
    }

    fn param_count(&self) -> usize {
        self.inner().param_count()
    }
}

/// Standardized train/test sets and the scaler fitted on the training part.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub train: TrajectorySet,
    pub test: TrajectorySet,
    pub scaler: StandardScaler,
}

/// Optionally truncates both parts, then standardizes with training statistics.
pub fn prepare(c: &DatasetContainer, truncate_train: Option<usize>, truncate_test: Option<usize>) -> Result<Prepared> {
    let train = truncate_train.map_or_else(|| c.train.clone(), |n| c.train.truncated(n));
    let test = truncate_test.map_or_else(|| c.test.clone(), |n| c.test.truncated(n));
    let scaler = StandardScaler::fit(&train)?;
    Ok(Prepared {
        name: c.name.clone(),
        train: scaler.apply(&train, Direction::Forward)?,
        test: scaler.apply(&test, Direction::Forward)?,
        scaler,
    })
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: AnyModel,
    /// Lowest test MSE and lowest test MAE over all evaluations.
    pub metrics: Metrics,
    pub history: Vec<EpochRecord>,
    pub diverged: bool,
    pub seconds: f64,
}

/// Builds and fits the model described by `spec` on `data`, scoring the
/// test part as it goes.
pub fn fit_model(spec: &ModelSpec, data: &Prepared, task: &ForecastTask) -> Result<FitOutcome> {
    let start = Instant::now();
    let dim = data.train.dim();
    let (l, t) = (task.lookback, task.horizon);
    let mut rng = Rng::new(spec.seed);
    let (model, history, diverged) = if spec.kind.trained() {
        let cfg = spec.train_config()?;
        match spec.kind {
            ModelKind::LatentNlinear => {
                let m = LatentNLinear::new(&spec.latent_nlinear_config(), l, t, dim, &mut rng)?;
                let out = train(&m, &data.train, &data.test, task, &cfg)?;
                (AnyModel::LatentNlinear(out.model), out.history, out.diverged)
            }
            _ => {
                let m = LinOde::new(&spec.linode_config(), l, dim, &mut rng)?;
                let out = train(&m, &data.train, &data.test, task, &cfg)?;
                (AnyModel::Linode(out.model), out.history, out.diverged)
            }
        }
    } else {
        let model = match spec.kind {
            ModelKind::Persistence => AnyModel::Persistence(Persistence::new(l, dim)?),
            kind => {
                let variant = if kind == ModelKind::NlinearB { NLinearVariant::B } else { NLinearVariant::A };
                let windows = spec.fit_stride.map_or(FitWindows::First, FitWindows::Strided);
                AnyModel::Nlinear(NLinear::fit(&data.train, l, t, variant, spec.lambda, windows)?)
            }
        };
        (model, Vec::new(), false)
    };
    let metrics = if history.iter().any(|r| r.test_mse.is_some()) {
        let best = |f: fn(&EpochRecord) -> Option<f64>| history.iter().filter_map(f).min_by(f64::total_cmp);
        Metrics {
            mse: best(|r| r.test_mse).expect("checked"),
            mae: best(|r| r.test_mae).expect("checked"),
        }
    } else if diverged {
        return Err(Error::Numerical(format!("{} diverged before its first evaluation", spec.label())));
    } else {
        evaluate(&model, &data.test, task)?
    };
    Ok(FitOutcome {
        model,
        metrics,
        history,
        diverged,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn load_model(path: &std::path::Path) -> Result<AnyModel> {
    AnyModel::from_checkpoint(&crate::dataio::load_checkpoint(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn noise_container(seed: u64) -> DatasetContainer {
        let mut rng = Rng::new(seed);
        let mut make = |m: usize| {
            let data = (0..m * 12).map(|_| 3.0 + 2.0 * rng.normal()).collect();
            TrajectorySet::new((m, 12, 1), data, None).unwrap()
        };
        DatasetContainer::new("noise", make(40), make(10), BTreeMap::new()).unwrap()
    }

    #[test]
    fn prepare_standardizes_train() {
        let p = prepare(&noise_container(1), None, None).unwrap();
        let z = p.train.data();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        assert_eq!(prepare(&noise_container(1), Some(7), None).unwrap().train.num_trajectories(), 7);
    }

    #[test]
    fn every_kind_fits_and_round_trips() {
        let p = prepare(&noise_container(2), None, None).unwrap();
        let task = ForecastTask::new("noise", 4, 12).unwrap();
        for kind in [
            ModelKind::Linode,
            ModelKind::LinodeDde,
            ModelKind::Nlinear,
            ModelKind::NlinearB,
            ModelKind::LatentNlinear,
            ModelKind::Persistence,
        ] {
            let mut spec = ModelSpec::new(kind);
            spec.epochs = 2;
            spec.latent_dim = Some(3);
            let out = fit_model(&spec, &p, &task).unwrap();
            assert!(out.metrics.mse.is_finite(), "{}", kind.name());
            let back = AnyModel::from_checkpoint(&out.model.to_checkpoint()).unwrap();
            assert_eq!(back, out.model, "{}", kind.name());
        }
    }
}
