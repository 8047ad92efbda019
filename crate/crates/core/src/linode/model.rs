use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::dataio::Checkpoint;
use crate::error::{Error, FormatError, Result};
use crate::matexp::{delayed_expm, delayed_expm_grad, expm, expm_frechet_adjoint, GeneratorClass, SkewDiagGenerator};
use crate::numkit::{Matrix, Rng};
use crate::task::Forecaster;

/// How the ODE-mode backward pass obtains the latent states `h_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GradMemory {
    /// Keep every `h_j` from the forward pass: memory grows with the horizon.
    #[default]
    StoreStates,
    /// Keep only `h_T` and walk back with `expm(-A dt)`: memory independent of the horizon.
    Recompute,
}

impl GradMemory {
    pub fn name(self) -> &'static str {
        match self {
            GradMemory::StoreStates => "store_states",
            GradMemory::Recompute => "recompute",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinOdeConfig {
    pub latent_dim: usize,
    pub generator: GeneratorClass,
    /// Hidden widths of the encoder; empty means affine.
    pub encoder_hidden: Vec<usize>,
    /// Hidden widths of the decoder; empty means affine.
    pub decoder_hidden: Vec<usize>,
    /// Constant-history delay; `Some` switches to the delayed system `h' = A h(t - d)`.
    pub delay: Option<f64>,
    /// Model time per grid step.
    pub step_unit: f64,
    pub memory: GradMemory,
    /// Generator parameters start in `U(-scale, scale)`.
    pub generator_init: f64,
}

impl Default for LinOdeConfig {
    fn default() -> Self {
        Self {
            latent_dim: 50,
            generator: GeneratorClass::SkewPlusDiag,
            encoder_hidden: Vec::new(),
            decoder_hidden: vec![64],
            delay: None,
            step_unit: 1.0,
            memory: GradMemory::StoreStates,
            generator_init: 0.01,
        }
    }
}

/// Encoder, linear latent dynamics `h' = A h` (or `h' = A h(t - d)`), decoder.
///
/// Forecast step `j` sits at latent time `j * step_unit` after the last
/// lookback state. Parameters flatten as encoder, generator, decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOde {
    lookback: usize,
    dim: usize,
    encoder: Mlp,
    generator: SkewDiagGenerator,
    decoder: Mlp,
    delay: Option<f64>,
    step_unit: f64,
    memory: GradMemory,
}

/// Tracks live and peak `f64` counts of buffers retained by the backward pass.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MemoryTrace {
    live: usize,
    pub peak: usize,
}

impl MemoryTrace {
    fn hold(&mut self, n: usize) {
        self.live += n;
        self.peak = self.peak.max(self.live);
    }

    fn release(&mut self, n: usize) {
        self.live -= n;
    }
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

impl LinOde {
    pub fn new(cfg: &LinOdeConfig, lookback: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        if cfg.latent_dim == 0 || lookback == 0 || dim == 0 {
            return Err(Error::Config("latent_dim, lookback and dim must be positive".into()));
        }
        let encoder = Mlp::new(&sizes(lookback * dim, &cfg.encoder_hidden, cfg.latent_dim), rng)?;
        let n = cfg.generator.num_params(cfg.latent_dim);
        let params = (0..n)
            .map(|_| rng.uniform(-cfg.generator_init, cfg.generator_init))
            .collect::<Result<Vec<_>>>()?;
        let generator = SkewDiagGenerator::new(cfg.latent_dim, cfg.generator, params)?;
        let decoder = Mlp::new(&sizes(cfg.latent_dim, &cfg.decoder_hidden, dim), rng)?;
        Self::from_parts(lookback, dim, encoder, generator, decoder, cfg.delay, cfg.step_unit)
            .map(|m| m.with_memory(cfg.memory))
    }

    pub fn from_parts(
        lookback: usize,
        dim: usize,
        encoder: Mlp,
        generator: SkewDiagGenerator,
        decoder: Mlp,
        delay: Option<f64>,
        step_unit: f64,
    ) -> Result<Self> {
        let dz = generator.dim();
        if encoder.in_dim() != lookback * dim || encoder.out_dim() != dz {
            return Err(Error::Shape(format!(
                "encoder maps {} -> {}, need {} -> {dz}",
                encoder.in_dim(),
                encoder.out_dim(),
                lookback * dim
            )));
        }
        if decoder.in_dim() != dz || decoder.out_dim() != dim {
            return Err(Error::Shape(format!(
                "decoder maps {} -> {}, need {dz} -> {dim}",
                decoder.in_dim(),
                decoder.out_dim()
            )));
        }
        if let Some(d) = delay {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delay must be positive, got {d}")));
            }
        }
        if !(step_unit > 0.0 && step_unit.is_finite()) {
            return Err(Error::Config(format!("step_unit must be positive, got {step_unit}")));
        }
        Ok(Self {
            lookback,
            dim,
            encoder,
            generator,
            decoder,
            delay,
            step_unit,
            memory: GradMemory::default(),
        })
    }

    pub fn with_memory(mut self, memory: GradMemory) -> Self {
        self.memory = memory;
        self
    }

    pub fn latent_dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn generator(&self) -> &SkewDiagGenerator {
        &self.generator
    }

    pub fn delay(&self) -> Option<f64> {
        self.delay
    }

    pub fn step_unit(&self) -> f64 {
        self.step_unit
    }

    pub fn memory(&self) -> GradMemory {
        self.memory
    }

    pub fn num_params(&self) -> usize {
        self.encoder.num_params() + self.generator.params().len() + self.decoder.num_params()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend_from_slice(self.generator.params());
        p.extend(self.decoder.params());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Shape(format!("model has {} parameters, got {}", self.num_params(), p.len())));
        }
        let ne = self.encoder.num_params();
        let ng = self.generator.params().len();
        self.encoder.set_params(&p[..ne])?;
        self.generator.params_mut().copy_from_slice(&p[ne..ne + ng]);
        self.decoder.set_params(&p[ne + ng..])
    }

    fn window_matrix(&self, windows: &[f64], batch: usize) -> Result<Matrix> {
        let width = self.lookback * self.dim;
        if windows.len() != width * batch {
            return Err(Error::Shape(format!(
                "expected {batch} windows of {width} values, got {} values",
                windows.len()
            )));
        }
        Ok(Matrix::from_column_slice(width, batch, windows))
    }

    /// Latent initial states, one column per window.
    pub fn encode(&self, windows: &[f64], batch: usize) -> Result<Matrix> {
        self.encoder.forward(&self.window_matrix(windows, batch)?)
    }

    pub fn decode(&self, h: &Matrix) -> Result<Matrix> {
        self.decoder.forward(h)
    }

    /// Latent states at `t = k * step_unit`, `k = 1..=count`. ODE mode applies
    /// the cached one-step map `expm(A step_unit)` repeatedly.
    pub fn propagate_uniform(&self, z0: &Matrix, count: usize) -> Result<Vec<Matrix>> {
        let mut out = Vec::with_capacity(count);
        self.for_each_uniform(z0, count, |_, h| {
            out.push(h.clone());
            Ok(())
        })?;
        Ok(out)
    }

    fn for_each_uniform(
        &self,
        z0: &Matrix,
        count: usize,
        mut f: impl FnMut(usize, &Matrix) -> Result<()>,
    ) -> Result<()> {
        let a = self.generator.materialize();
        match self.delay {
            None => {
                let m = expm(&(&a * self.step_unit))?;
                let mut h = z0.clone();
                for k in 1..=count {
                    h = &m * &h;
                    f(k, &h)?;
                }
            }
            Some(d) => {
                for k in 1..=count {
                    let p = delayed_expm(&a, d, k as f64 * self.step_unit)?;
                    f(k, &(p * z0))?;
                }
            }
        }
        Ok(())
    }

    /// Latent states at arbitrary non-negative times, each by a direct
    /// evaluation of the solution operator.
    pub fn propagate(&self, z0: &Matrix, times: &[f64]) -> Result<Vec<Matrix>> {
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Domain(format!("query times must be finite and >= 0, got {t}")));
        }
        let a = self.generator.materialize();
        times
            .iter()
            .map(|&t| {
                let p = match self.delay {
                    None => expm(&(&a * t))?,
                    Some(d) => delayed_expm(&a, d, t)?,
                };
                Ok(p * z0)
            })
            .collect()
    }

    fn scatter(&self, out: &mut [f64], step: usize, steps: usize, yhat: &Matrix) {
        let d = self.dim;
        for (b, col) in yhat.column_iter().enumerate() {
            let off = (b * steps + step) * d;
            out[off..off + d].copy_from_slice(col.as_slice());
        }
    }

    /// Forecasts at arbitrary times, laid out `batch x times x dim`.
    pub fn forecast_times(&self, windows: &[f64], batch: usize, times: &[f64]) -> Result<Vec<f64>> {
        let z0 = self.encode(windows, batch)?;
        let mut out = vec![0.0; batch * times.len() * self.dim];
        for (j, h) in self.propagate(&z0, times)?.iter().enumerate() {
            self.scatter(&mut out, j, times.len(), &self.decode(h)?);
        }
        Ok(out)
    }

    fn target_matrix(&self, y: &[f64], batch: usize, horizon: usize, step: usize) -> Matrix {
        let d = self.dim;
        Matrix::from_fn(d, batch, |k, b| y[(b * horizon + step) * d + k])
    }

    /// Mean squared error over `batch x horizon x dim` and its exact gradient
    /// in [`LinOde::params`] order.
    pub fn loss_and_grad(&self, x: &[f64], y: &[f64], batch: usize, horizon: usize) -> Result<(f64, Vec<f64>)> {
        self.loss_and_grad_traced(x, y, batch, horizon, &mut MemoryTrace::default())
    }

    /// As [`LinOde::loss_and_grad`], recording retained buffer sizes in `trace`.
    pub fn loss_and_grad_traced(
        &self,
        x: &[f64],
        y: &[f64],
        batch: usize,
        horizon: usize,
        trace: &mut MemoryTrace,
    ) -> Result<(f64, Vec<f64>)> {
        if horizon == 0 || batch == 0 {
            return Err(Error::Shape("batch and horizon must be positive".into()));
        }
        if y.len() != batch * horizon * self.dim {
            return Err(Error::Shape(format!(
                "targets have {} values, expected {}",
                y.len(),
                batch * horizon * self.dim
            )));
        }
        let xin = self.window_matrix(x, batch)?;
        let (z0, enc_cache) = self.encoder.forward_cached(&xin)?;
        trace.hold(enc_cache.footprint() + z0.len());
        let scale = 2.0 / (batch * horizon * self.dim) as f64;
        let a = self.generator.materialize();
        let dz = self.latent_dim();
        trace.hold(2 * dz * dz);

        let mut dec_grads = vec![0.0; self.decoder.num_params()];
        let mut loss = 0.0;
        let (grad_a, gz0) = match (self.delay, self.memory) {
            (Some(d), _) => {
                let mut grad_a = Matrix::zeros(dz, dz);
                let mut gz0 = Matrix::zeros(dz, batch);
                trace.hold(grad_a.len() + gz0.len());
                for j in 1..=horizon {
                    let t = j as f64 * self.step_unit;
                    let p = delayed_expm(&a, d, t)?;
                    let h = &p * &z0;
                    let (e, l) = self.decoder_step(&h, y, batch, horizon, j - 1, scale, &mut dec_grads, trace)?;
                    loss += l;
                    grad_a += delayed_expm_grad(&a, d, t, &(&e * z0.transpose()))?;
                    gz0 += p.transpose() * &e;
                }
                (grad_a, gz0)
            }
            (None, GradMemory::StoreStates) => {
                let m = expm(&(&a * self.step_unit))?;
                let mut states = Vec::with_capacity(horizon + 1);
                states.push(z0.clone());
                for j in 1..=horizon {
                    let next = &m * &states[j - 1];
                    states.push(next);
                }
                trace.hold(horizon * dz * batch);
                let mut adj = Matrix::zeros(dz, batch);
                let mut g_m = Matrix::zeros(dz, dz);
                trace.hold(adj.len() + g_m.len());
                for j in (1..=horizon).rev() {
                    let (e, l) = self.decoder_step(&states[j], y, batch, horizon, j - 1, scale, &mut dec_grads, trace)?;
                    loss += l;
                    adj = e + m.transpose() * &adj;
                    g_m += &adj * states[j - 1].transpose();
                }
                let gz0 = m.transpose() * &adj;
                let grad_a = expm_frechet_adjoint(&(&a * self.step_unit), &g_m)? * self.step_unit;
                (grad_a, gz0)
            }
            (None, GradMemory::Recompute) => {
                let step = &a * self.step_unit;
                let m = expm(&step)?;
                let m_inv = expm(&(-&step))?;
                trace.hold(dz * dz);
                let mut h = z0.clone();
                trace.hold(h.len());
                for _ in 0..horizon {
                    h = &m * &h;
                }
                let mut adj = Matrix::zeros(dz, batch);
                let mut g_m = Matrix::zeros(dz, dz);
                trace.hold(adj.len() + g_m.len());
                for j in (1..=horizon).rev() {
                    let (e, l) = self.decoder_step(&h, y, batch, horizon, j - 1, scale, &mut dec_grads, trace)?;
                    loss += l;
                    adj = e + m.transpose() * &adj;
                    let prev = if j == 1 { z0.clone() } else { &m_inv * &h };
                    g_m += &adj * prev.transpose();
                    h = prev;
                }
                let gz0 = m.transpose() * &adj;
                let grad_a = expm_frechet_adjoint(&step, &g_m)? * self.step_unit;
                (grad_a, gz0)
            }
        };
        let loss = loss / (batch * horizon * self.dim) as f64;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss {loss}")));
        }
        let (enc_grads, _) = self.encoder.backward(&enc_cache, &gz0);
        let mut grads = enc_grads;
        grads.extend(self.generator.pullback(&grad_a));
        grads.extend(dec_grads);
        Ok((loss, grads))
    }

    /// Decodes one horizon step, adds its squared error, accumulates decoder
    /// gradients and returns `dLoss/dh` with the unnormalized squared error.
    #[allow(clippy::too_many_arguments)]
    fn decoder_step(
        &self,
        h: &Matrix,
        y: &[f64],
        batch: usize,
        horizon: usize,
        step: usize,
        scale: f64,
        dec_grads: &mut [f64],
        trace: &mut MemoryTrace,
    ) -> Result<(Matrix, f64)> {
        let (yhat, cache) = self.decoder.forward_cached(h)?;
        let held = cache.footprint() + 2 * yhat.len();
        trace.hold(held);
        let diff = yhat - self.target_matrix(y, batch, horizon, step);
        let sq = diff.norm_squared();
        let (g, e) = self.decoder.backward(&cache, &(diff * scale));
        for (acc, v) in dec_grads.iter_mut().zip(g) {
            *acc += v;
        }
        trace.release(held);
        Ok((e, sq))
    }

    /// Parameter groups `encoder`, `generator`, `decoder`; MLP groups flatten
    /// per layer as column-major `W` then `b`.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let join = |v: Vec<usize>| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), "linode".into());
        metadata.insert("lookback".into(), self.lookback.to_string());
        metadata.insert("dim".into(), self.dim.to_string());
        metadata.insert("latent_dim".into(), self.latent_dim().to_string());
        metadata.insert("generator_class".into(), self.generator.class().name().into());
        metadata.insert("encoder_sizes".into(), join(self.encoder.sizes()));
        metadata.insert("decoder_sizes".into(), join(self.decoder.sizes()));
        metadata.insert("delay".into(), self.delay.map_or("none".into(), |d| format!("{d:?}")));
        metadata.insert("step_unit".into(), format!("{:?}", self.step_unit));
        metadata.insert("memory".into(), self.memory.name().into());
        Checkpoint {
            metadata,
            groups: vec![
                ("encoder".into(), self.encoder.params()),
                ("generator".into(), self.generator.params().to_vec()),
                ("decoder".into(), self.decoder.params()),
            ],
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let bad = |m: String| Error::from(FormatError::BadMetadata(m));
        if ckpt.meta("model")? != "linode" {
            return Err(bad(format!("checkpoint holds model {:?}, not linode", ckpt.meta("model")?)));
        }
        let num = |k: &str| -> Result<usize> { ckpt.meta(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
        let real = |k: &str| -> Result<f64> { ckpt.meta(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
        let size_list = |k: &str| -> Result<Vec<usize>> {
            ckpt.meta(k)?
                .split(',')
                .map(|s| s.parse().map_err(|_| bad(format!("bad {k}"))))
                .collect()
        };
        let (lookback, dim, dz) = (num("lookback")?, num("dim")?, num("latent_dim")?);
        let class = GeneratorClass::parse(ckpt.meta("generator_class")?)?;
        let mut rng = Rng::new(0);
        let mut encoder = Mlp::new(&size_list("encoder_sizes")?, &mut rng)?;
        encoder.set_params(ckpt.group("encoder")?)?;
        let mut decoder = Mlp::new(&size_list("decoder_sizes")?, &mut rng)?;
        decoder.set_params(ckpt.group("decoder")?)?;
        let generator = SkewDiagGenerator::new(dz, class, ckpt.group("generator")?.to_vec())?;
        let delay = match ckpt.meta("delay")? {
            "none" => None,
            _ => Some(real("delay")?),
        };
        let memory = match ckpt.meta("memory")? {
            "recompute" => GradMemory::Recompute,
            _ => GradMemory::StoreStates,
        };
        Ok(Self::from_parts(lookback, dim, encoder, generator, decoder, delay, real("step_unit")?)?.with_memory(memory))
    }
}

impl Forecaster for LinOde {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>> {
        let z0 = self.encode(windows, batch)?;
        let mut out = vec![0.0; batch * horizon * self.dim];
        self.for_each_uniform(&z0, horizon, |k, h| {
            let yhat = self.decode(h)?;
            self.scatter(&mut out, k - 1, horizon, &yhat);
            Ok(())
        })?;
        Ok(out)
    }

    fn param_count(&self) -> usize {
        self.num_params()
    }
}
