//! Synthetic trajectory generators.
//!
//! Every trajectory draws from its own [`Rng`] stream derived from
//! `(seed, trajectory index)`, so output is bit-identical for any worker
//! count or evaluation order. Frame 0 is always the initial condition.

mod cahn_hilliard;
pub mod integrate;
mod kuramoto;
mod lorenz;
mod lotka_volterra;
mod mackey_glass;
mod sinewave;
mod trajectory;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cahn_hilliard::{gen_cahn_hilliard, CahnHilliardParams, CahnHilliardSolver};
pub use integrate::{euler_step, rk4_step};
pub use kuramoto::{gen_ks, ks_rollout, KsParams, KsSolver};
pub use lorenz::{gen_lorenz, lorenz_rollout, LorenzParams};
pub use lotka_volterra::{gen_lotka_volterra, lv_rollout, LotkaVolterraParams};
pub use mackey_glass::{gen_mackey_glass, mackey_glass_rollout, MackeyGlassParams};
pub use sinewave::{gen_sinewave, sinewave_trajectory, SinewaveParams};
pub use trajectory::TrajectorySet;

use crate::error::{Error, Result};
use crate::numkit::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum System {
    Sinewave,
    MackeyGlass,
    Lorenz,
    LotkaVolterra,
    KsPde,
    CahnHilliard,
}

impl System {
    pub const ALL: [System; 6] = [
        System::Sinewave,
        System::MackeyGlass,
        System::Lorenz,
        System::LotkaVolterra,
        System::KsPde,
        System::CahnHilliard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            System::Sinewave => "sinewave",
            System::MackeyGlass => "mackey_glass",
            System::Lorenz => "lorenz",
            System::LotkaVolterra => "lotka_volterra",
            System::KsPde => "ks_pde",
            System::CahnHilliard => "cahn_hilliard",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sys| sys.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown system {s:?}")))
    }

    pub fn state_dim(self) -> usize {
        match self {
            System::Sinewave | System::MackeyGlass => 1,
            System::Lorenz => 3,
            System::LotkaVolterra => 2,
            System::KsPde => 100,
            System::CahnHilliard => 256,
        }
    }

    pub fn default_traj_len(self) -> usize {
        match self {
            System::KsPde | System::CahnHilliard => 1000,
            _ => 2000,
        }
    }

    /// Lookback lengths benchmarked for this system.
    pub fn default_lookbacks(self) -> &'static [usize] {
        match self {
            System::Sinewave => &[2, 8, 96],
            // Every lookback must leave a non-empty horizon.
            System::LotkaVolterra | System::MackeyGlass | System::Lorenz => &[96, 500, 1000],
            System::KsPde | System::CahnHilliard => &[96, 250, 500],
        }
    }
}

/// What to generate. Defaults follow the published dataset sizes: 20k
/// trajectories split 18k/2k.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub system: System,
    pub n_train: usize,
    pub n_test: usize,
    pub traj_len: usize,
    pub seed: u64,
    /// Per-step growth-rate jitter; only read by Lotka-Volterra.
    pub noise_enabled: bool,
    /// Named constant overrides, validated per system.
    pub overrides: BTreeMap<String, f64>,
}

impl GeneratorSpec {
    pub fn new(system: System) -> Self {
        Self {
            system,
            n_train: 18_000,
            n_test: 2_000,
            traj_len: system.default_traj_len(),
            seed: 0,
            noise_enabled: true,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_counts(mut self, n_train: usize, n_test: usize) -> Self {
        self.n_train = n_train;
        self.n_test = n_test;
        self
    }

    pub fn with_traj_len(mut self, traj_len: usize) -> Self {
        self.traj_len = traj_len;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_override(mut self, key: &str, value: f64) -> Self {
        self.overrides.insert(key.to_string(), value);
        self
    }

    pub fn total(&self) -> usize {
        self.n_train + self.n_test
    }

    pub(crate) fn validate(&self, expected: System) -> Result<()> {
        if self.system != expected {
            return Err(Error::Config(format!(
                "spec is for {}, not {}",
                self.system.name(),
                expected.name()
            )));
        }
        if self.traj_len < 2 {
            return Err(Error::Config(format!("traj_len must be >= 2, got {}", self.traj_len)));
        }
        if self.total() == 0 {
            return Err(Error::Config("n_train + n_test must be >= 1".into()));
        }
        Ok(())
    }
}

/// Reads named overrides against a fixed key list.
pub(crate) struct Overrides<'a> {
    map: &'a BTreeMap<String, f64>,
}

impl<'a> Overrides<'a> {
    pub(crate) fn new(map: &'a BTreeMap<String, f64>, known: &[&str]) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown override {bad:?}; known keys: {}",
                known.join(", ")
            )));
        }
        Ok(Self { map })
    }

    pub(crate) fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }
}

/// Side information from a generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationReport {
    /// Trajectories redrawn after a non-physical state (Lotka-Volterra only).
    pub regenerated: usize,
}

/// Runs `make(i, rng_i)` for every trajectory index on `workers` threads and
/// assembles the results in index order.
pub(crate) fn per_trajectory<F>(
    spec: &GeneratorSpec,
    dim: usize,
    workers: usize,
    make: F,
) -> Result<TrajectorySet>
where
    F: Fn(usize, Rng) -> Result<Vec<f64>> + Sync,
{
    let total = spec.total();
    let run = || -> Vec<Result<Vec<f64>>> {
        (0..total)
            .into_par_iter()
            .map(|i| make(i, Rng::for_stream(spec.seed, i as u64)))
            .collect()
    };
    let results = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?
            .install(run)
    };
    let trajectories = results.into_iter().collect::<Result<Vec<_>>>()?;
    TrajectorySet::from_trajectories(trajectories, spec.traj_len, dim)
}

/// Generates all `n_train + n_test` trajectories of `spec`.
///
/// `workers = 0` uses the global thread pool.
pub fn generate(spec: &GeneratorSpec, workers: usize) -> Result<(TrajectorySet, GenerationReport)> {
    let mut report = GenerationReport::default();
    let set = match spec.system {
        System::Sinewave => gen_sinewave(spec, workers)?,
        System::MackeyGlass => gen_mackey_glass(spec, workers)?,
        System::Lorenz => gen_lorenz(spec, workers)?,
        System::LotkaVolterra => {
            let (set, regenerated) = gen_lotka_volterra(spec, workers)?;
            report.regenerated = regenerated;
            set
        }
        System::KsPde => gen_ks(spec, workers)?,
        System::CahnHilliard => gen_cahn_hilliard(spec, workers)?,
    };
    Ok((set, report))
}
