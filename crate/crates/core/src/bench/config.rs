use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::models::{fit_model, prepare, ModelSpec};
use super::report::{BenchmarkReport, ReportRow};
use crate::dataio::{load, DatasetContainer};
use crate::dynsys::{generate, GeneratorSpec, System};
use crate::error::{Error, Result};
use crate::task::{ForecastTask, Forecaster};

/// One `[[dataset]]` table: either a generated system or an LTSF-TENSOR file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: Option<String>,
    pub system: Option<System>,
    pub path: Option<PathBuf>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub traj_len: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    /// Defaults to the system's published lookbacks.
    pub lookbacks: Option<Vec<usize>>,
    pub truncate_train: Option<usize>,
    pub truncate_test: Option<usize>,
    /// Display metrics multiplied by 100; defaults to on for sinewave.
    pub scale100: Option<bool>,
}

impl DatasetEntry {
    pub fn label(&self) -> String {
        self.name
            .clone()
            .or_else(|| self.system.map(|s| s.name().to_string()))
            .or_else(|| self.path.as_ref().map(|p| p.display().to_string()))
            .unwrap_or_else(|| "dataset".into())
    }

    fn load(&self, base: &Path, seed: u64, workers: usize) -> Result<DatasetContainer> {
        match (&self.system, &self.path) {
            (Some(system), None) => {
                let mut spec = GeneratorSpec::new(*system).with_seed(self.seed.unwrap_or(seed));
                if let Some(n) = self.n_train {
                    spec.n_train = n;
                }
                if let Some(n) = self.n_test {
                    spec.n_test = n;
                }
                if let Some(n) = self.traj_len {
                    spec.traj_len = n;
                }
                spec.overrides = self.overrides.clone();
                let (set, _) = generate(&spec, workers)?;
                let (train, test) = set.split_at(spec.n_train);
                DatasetContainer::new(self.label(), train, test, BTreeMap::new())
            }
            (None, Some(path)) => load(&base.join(path)),
            _ => Err(Error::Config(format!(
                "dataset {:?} needs exactly one of `system` or `path`",
                self.label()
            ))),
        }
    }

    fn lookbacks(&self) -> Result<Vec<usize>> {
        match (&self.lookbacks, self.system) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(s)) => Ok(s.default_lookbacks().to_vec()),
            (None, None) => Err(Error::Config(format!("dataset {:?} needs `lookbacks`", self.label()))),
        }
    }
}

/// Benchmark description: datasets crossed with models at each lookback.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelSpec>,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("benchmark config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Fits every model on every dataset and lookback; a failing cell is
/// recorded without metrics and the run continues. Relative dataset paths
/// resolve against `base`.
pub fn run_benchmark(cfg: &BenchConfig, base: &Path) -> Result<BenchmarkReport> {
    let mut rows = Vec::new();
    if cfg.models.is_empty() {
        return Ok(BenchmarkReport { rows });
    }
    for entry in &cfg.datasets {
        let name = entry.label();
        let container = entry.load(base, cfg.seed, cfg.workers)?;
        let data = prepare(&container, entry.truncate_train, entry.truncate_test)?;
        let scale100 = entry.scale100.unwrap_or(entry.system == Some(System::Sinewave));
        for lookback in entry.lookbacks()? {
            for spec in &cfg.models {
                let cell = ForecastTask::new(name.clone(), lookback, data.train.traj_len())
                    .and_then(|task| fit_model(spec, &data, &task));
                let row = match cell {
                    Ok(out) => {
                        log::info!(
                            "{name} L={lookback} {}: mse {:.4e} mae {:.4e} ({:.1}s)",
                            spec.label(),
                            out.metrics.mse,
                            out.metrics.mae,
                            out.seconds
                        );
                        ReportRow {
                            dataset: name.clone(),
                            lookback,
                            model: spec.label(),
                            mse: Some(out.metrics.mse),
                            mae: Some(out.metrics.mae),
                            params: Some(out.model.param_count()),
                            wall_time: out.seconds,
                            scale100,
                        }
                    }
                    Err(e) => {
                        log::warn!("{name} L={lookback} {}: {e}", spec.label());
                        ReportRow {
                            dataset: name.clone(),
                            lookback,
                            model: spec.label(),
                            mse: None,
                            mae: None,
                            params: None,
                            wall_time: 0.0,
                            scale100,
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(BenchmarkReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
seed = 3

[[dataset]]
system = "sinewave"
n_train = 30
n_test = 10
traj_len = 40
lookbacks = [8, 60]
truncate_train = 20

[[model]]
kind = "nlinear"

[[model]]
kind = "persistence"
"#;

    #[test]
    fn runs_and_marks_failures() {
        let cfg = BenchConfig::parse(SMALL).unwrap();
        let report = run_benchmark(&cfg, Path::new(".")).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows[..2].iter().all(|r| r.mse.is_some()));
        // L = 60 exceeds the trajectory length.
        assert!(report.rows[2..].iter().all(|r| r.mse.is_none()));
    }

    #[test]
    fn empty_model_list() {
        let cfg = BenchConfig::parse("[[dataset]]\nsystem = \"lorenz\"\n").unwrap();
        assert!(run_benchmark(&cfg, Path::new(".")).unwrap().rows.is_empty());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(BenchConfig::parse("[[model]]\nkind = \"nlinear\"\nlamda = 1.0\n").is_err());
        assert!(BenchConfig::parse("[[model]]\nkind = \"transformer\"\n").is_err());
    }
}
