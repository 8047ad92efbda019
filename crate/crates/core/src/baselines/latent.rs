use std::collections::BTreeMap;

use crate::dataio::Checkpoint;
use crate::error::{Error, FormatError, Result};
use crate::linode::{Mlp, Trainable};
use crate::numkit::{Matrix, Rng, Vector};
use crate::task::Forecaster;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentNLinearConfig {
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
}

impl Default for LatentNLinearConfig {
    fn default() -> Self {
        Self {
            latent_dim: 2,
            encoder_hidden: Vec::new(),
            decoder_hidden: Vec::new(),
        }
    }
}

/// NLinear on per-state latents: `zeta = W flatten(enc(x_1..x_L)) + b`,
/// `Y_j = dec(zeta_j) + x_L`.
///
/// `W` is `(T d_l) x (L d_l)`. Parameters flatten as encoder, `W`
/// (column-major), `b`, decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentNLinear {
    lookback: usize,
    horizon: usize,
    dim: usize,
    encoder: Mlp,
    w: Matrix,
    b: Vector,
    decoder: Mlp,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

struct Forward {
    zflat: Matrix,
    enc_cache: crate::linode::MlpCache,
    dec_cache: crate::linode::MlpCache,
    yhat: Matrix,
}

impl LatentNLinear {
    pub fn new(cfg: &LatentNLinearConfig, lookback: usize, horizon: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        let dl = cfg.latent_dim;
        if dl == 0 || lookback == 0 || horizon == 0 || dim == 0 {
            return Err(Error::Config("latent_dim, lookback, horizon and dim must be positive".into()));
        }
        let encoder = Mlp::new(&sizes(dim, &cfg.encoder_hidden, dl), rng)?;
        let decoder = Mlp::new(&sizes(dl, &cfg.decoder_hidden, dim), rng)?;
        let w = Matrix::zeros(horizon * dl, lookback * dl);
        Self::from_parts(lookback, horizon, encoder, w, Vector::zeros(horizon * dl), decoder)
    }

    pub fn from_parts(lookback: usize, horizon: usize, encoder: Mlp, w: Matrix, b: Vector, decoder: Mlp) -> Result<Self> {
        let dl = encoder.out_dim();
        let dim = encoder.in_dim();
        if decoder.in_dim() != dl || decoder.out_dim() != dim {
            return Err(Error::Shape(format!(
                "decoder maps {} -> {}, need {dl} -> {dim}",
                decoder.in_dim(),
                decoder.out_dim()
            )));
        }
        if w.shape() != (horizon * dl, lookback * dl) || b.len() != horizon * dl {
            return Err(Error::Shape(format!("latent map {:?} does not fit L={lookback}, T={horizon}, d_l={dl}", w.shape())));
        }
        Ok(Self {
            lookback,
            horizon,
            dim,
            encoder,
            w,
            b,
            decoder,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.out_dim()
    }

    pub fn count_params(&self) -> usize {
        self.encoder.num_params() + self.w.len() + self.b.len() + self.decoder.num_params()
    }

    fn forward(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Forward> {
        let (l, d, dl) = (self.lookback, self.dim, self.latent_dim());
        if windows.len() != batch * l * d {
            return Err(Error::Shape(format!("expected {} window values, got {}", batch * l * d, windows.len())));
        }
        if horizon == 0 || horizon > self.horizon {
            return Err(Error::Shape(format!("horizon {horizon} outside 1..={}", self.horizon)));
        }
        // One state per column: column b*L + l.
        let states = Matrix::from_column_slice(d, batch * l, windows);
        let (z, enc_cache) = self.encoder.forward_cached(&states)?;
        let zflat = Matrix::from_column_slice(l * dl, batch, z.as_slice());
        let rows = horizon * dl;
        let mut zeta = self.w.rows(0, rows) * &zflat;
        for mut col in zeta.column_iter_mut() {
            col += self.b.rows(0, rows);
        }
        let zeta_states = Matrix::from_column_slice(dl, batch * horizon, zeta.as_slice());
        let (mut yhat, dec_cache) = self.decoder.forward_cached(&zeta_states)?;
        for (c, mut col) in yhat.column_iter_mut().enumerate() {
            let b = c / horizon;
            let last = &windows[(b * l + l - 1) * d..(b * l + l) * d];
            for (v, x) in col.iter_mut().zip(last) {
                *v += x;
            }
        }
        Ok(Forward {
            zflat,
            enc_cache,
            dec_cache,
            yhat,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let join = |v: Vec<usize>| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), "latent_nlinear".into());
        metadata.insert("lookback".into(), self.lookback.to_string());
        metadata.insert("horizon".into(), self.horizon.to_string());
        metadata.insert("encoder_sizes".into(), join(self.encoder.sizes()));
        metadata.insert("decoder_sizes".into(), join(self.decoder.sizes()));
        Checkpoint {
            metadata,
            groups: vec![
                ("encoder".into(), self.encoder.params()),
                ("w".into(), self.w.as_slice().to_vec()),
                ("b".into(), self.b.as_slice().to_vec()),
                ("decoder".into(), self.decoder.params()),
            ],
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let bad = |m: String| Error::from(FormatError::BadMetadata(m));
        if ckpt.meta("model")? != "latent_nlinear" {
            return Err(bad(format!("checkpoint holds model {:?}, not latent_nlinear", ckpt.meta("model")?)));
        }
        let num = |k: &str| -> Result<usize> { ckpt.meta(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
        let size_list = |k: &str| -> Result<Vec<usize>> {
            ckpt.meta(k)?
                .split(',')
                .map(|s| s.parse().map_err(|_| bad(format!("bad {k}"))))
                .collect()
        };
        let (l, t) = (num("lookback")?, num("horizon")?);
        let mut rng = Rng::new(0);
        let mut encoder = Mlp::new(&size_list("encoder_sizes")?, &mut rng)?;
        encoder.set_params(ckpt.group("encoder")?)?;
        let mut decoder = Mlp::new(&size_list("decoder_sizes")?, &mut rng)?;
        decoder.set_params(ckpt.group("decoder")?)?;
        let dl = encoder.out_dim();
        let w = ckpt.group("w")?;
        if w.len() != t * dl * l * dl {
            return Err(bad(format!("latent map group has {} values", w.len())));
        }
        let w = Matrix::from_column_slice(t * dl, l * dl, w);
        Self::from_parts(l, t, encoder, w, Vector::from_column_slice(ckpt.group("b")?), decoder)
    }
}

impl Forecaster for LatentNLinear {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>> {
        Ok(self.forward(windows, batch, horizon)?.yhat.as_slice().to_vec())
    }

    fn param_count(&self) -> usize {
        self.count_params()
    }
}

impl Trainable for LatentNLinear {
    fn params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend_from_slice(self.w.as_slice());
        p.extend_from_slice(self.b.as_slice());
        p.extend(self.decoder.params());
        p
    }

    fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.count_params() {
            return Err(Error::Shape(format!("model has {} parameters, got {}", self.count_params(), p.len())));
        }
        let ne = self.encoder.num_params();
        let (nw, nb) = (self.w.len(), self.b.len());
        self.encoder.set_params(&p[..ne])?;
        self.w.as_mut_slice().copy_from_slice(&p[ne..ne + nw]);
        self.b.as_mut_slice().copy_from_slice(&p[ne + nw..ne + nw + nb]);
        self.decoder.set_params(&p[ne + nw + nb..])
    }

    fn loss_and_grad(&self, x: &[f64], y: &[f64], batch: usize, horizon: usize) -> Result<(f64, Vec<f64>)> {
        let (l, d, dl) = (self.lookback, self.dim, self.latent_dim());
        if y.len() != batch * horizon * d {
            return Err(Error::Shape(format!("targets have {} values, expected {}", y.len(), batch * horizon * d)));
        }
        let fwd = self.forward(x, batch, horizon)?;
        let n = (batch * horizon * d) as f64;
        let diff = fwd.yhat - Matrix::from_column_slice(d, batch * horizon, y);
        let loss = diff.norm_squared() / n;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss {loss}")));
        }
        let (dec_grads, g_zeta_states) = self.decoder.backward(&fwd.dec_cache, &(diff * (2.0 / n)));
        let rows = horizon * dl;
        let g_zeta = Matrix::from_column_slice(rows, batch, g_zeta_states.as_slice());
        let mut g_w = Matrix::zeros(self.w.nrows(), self.w.ncols());
        g_w.rows_mut(0, rows).copy_from(&(&g_zeta * fwd.zflat.transpose()));
        let mut g_b = Vector::zeros(self.b.len());
        g_b.rows_mut(0, rows).copy_from(&g_zeta.column_sum());
        let g_zflat = self.w.rows(0, rows).transpose() * &g_zeta;
        let g_z = Matrix::from_column_slice(dl, batch * l, g_zflat.as_slice());
        let (enc_grads, _) = self.encoder.backward(&fwd.enc_cache, &g_z);
        let mut grads = enc_grads;
        grads.extend_from_slice(g_w.as_slice());
        grads.extend_from_slice(g_b.as_slice());
        grads.extend(dec_grads);
        Ok((loss, grads))
    }
}
