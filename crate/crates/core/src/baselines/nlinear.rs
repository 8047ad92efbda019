use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::Checkpoint;
use crate::dynsys::TrajectorySet;
use crate::error::{Error, FormatError, Result};
use crate::numkit::{ridge_solve_normal, Matrix, Vector};
use crate::task::Forecaster;

/// How the lookback enters the linear map; both add the last state back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NLinearVariant {
    /// Map `X - x_L`.
    #[default]
    A,
    /// Map raw `X`.
    B,
}

impl NLinearVariant {
    pub fn name(self) -> &'static str {
        match self {
            NLinearVariant::A => "a",
            NLinearVariant::B => "b",
        }
    }
}

/// `(L D)(T D) + T D`: weights plus biases of a channel-mixing NLinear.
pub fn nlinear_param_count(lookback: usize, horizon: usize, dim: usize) -> usize {
    (lookback * dim) * (horizon * dim) + horizon * dim
}

/// Which `(X, Y)` pairs each training trajectory contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitWindows {
    /// The single split at the start of the trajectory.
    #[default]
    First,
    /// Every window of length `L + T` starting at multiples of the stride.
    Strided(usize),
}

/// Flattened linear forecaster: `Y = unflatten(W f(X) + b) + 1 x_L`.
///
/// `W` is `(T D) x (L D)` acting on row-major `(time, dim)` flattenings.
#[derive(Debug, Clone, PartialEq)]
pub struct NLinear {
    lookback: usize,
    horizon: usize,
    dim: usize,
    variant: NLinearVariant,
    w: Matrix,
    b: Vector,
}

/// Windows per normal-equation accumulation chunk.
const FIT_CHUNK: usize = 512;

impl NLinear {
    pub fn new(lookback: usize, horizon: usize, dim: usize, variant: NLinearVariant, w: Matrix, b: Vector) -> Result<Self> {
        if lookback == 0 || horizon == 0 || dim == 0 {
            return Err(Error::Config("lookback, horizon and dim must be positive".into()));
        }
        if w.shape() != (horizon * dim, lookback * dim) || b.len() != horizon * dim {
            return Err(Error::Shape(format!(
                "W {:?} / b {} do not fit L={lookback}, T={horizon}, D={dim}",
                w.shape(),
                b.len()
            )));
        }
        Ok(Self {
            lookback,
            horizon,
            dim,
            variant,
            w,
            b,
        })
    }

    pub fn zeros(lookback: usize, horizon: usize, dim: usize, variant: NLinearVariant) -> Result<Self> {
        Self::new(
            lookback,
            horizon,
            dim,
            variant,
            Matrix::zeros(horizon * dim, lookback * dim),
            Vector::zeros(horizon * dim),
        )
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn variant(&self) -> NLinearVariant {
        self.variant
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn bias(&self) -> &Vector {
        &self.b
    }

    pub fn count_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn features_into(&self, window: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let last = &window[window.len() - d..];
        for (i, (o, v)) in out.iter_mut().zip(window).enumerate() {
            *o = match self.variant {
                NLinearVariant::A => v - last[i % d],
                NLinearVariant::B => *v,
            };
        }
    }

    /// Closed-form direct multi-step fit by ridge regression on centered
    /// features and residual targets `Y - 1 x_L`, so the bias is unpenalized.
    pub fn fit(
        train: &TrajectorySet,
        lookback: usize,
        horizon: usize,
        variant: NLinearVariant,
        lambda: f64,
        windows: FitWindows,
    ) -> Result<Self> {
        let d = train.dim();
        let span = lookback + horizon;
        if train.traj_len() < span {
            return Err(Error::Shape(format!(
                "L + T = {span} exceeds trajectory length {}",
                train.traj_len()
            )));
        }
        let starts: Vec<usize> = match windows {
            FitWindows::First => vec![0],
            FitWindows::Strided(0) => return Err(Error::Config("fit stride must be >= 1".into())),
            FitWindows::Strided(s) => (0..=train.traj_len() - span).step_by(s).collect(),
        };
        let pairs: Vec<(usize, usize)> = (0..train.num_trajectories())
            .flat_map(|i| starts.iter().map(move |&s| (i, s)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::Domain("no training windows".into()));
        }
        let mut model = Self::zeros(lookback, horizon, d, variant)?;
        let (p, q) = (lookback * d, horizon * d);

        let build = |chunk: &[(usize, usize)]| -> (Matrix, Matrix) {
            let mut xs = Matrix::zeros(p, chunk.len());
            let mut ys = Matrix::zeros(q, chunk.len());
            for (c, &(i, s)) in chunk.iter().enumerate() {
                let traj = train.trajectory(i);
                let window = &traj[s * d..(s + lookback) * d];
                model.features_into(window, xs.column_mut(c).as_mut_slice());
                let last = &window[p - d..];
                let target = &traj[(s + lookback) * d..(s + span) * d];
                for (k, (o, v)) in ys.column_mut(c).as_mut_slice().iter_mut().zip(target).enumerate() {
                    *o = v - last[k % d];
                }
            }
            (xs, ys)
        };

        let n = pairs.len() as f64;
        let mut x_mean = Vector::zeros(p);
        let mut y_mean = Vector::zeros(q);
        for chunk in pairs.chunks(FIT_CHUNK) {
            let (xs, ys) = build(chunk);
            x_mean += xs.column_sum();
            y_mean += ys.column_sum();
        }
        x_mean /= n;
        y_mean /= n;

        let mut gram = Matrix::zeros(p, p);
        let mut rhs = Matrix::zeros(p, q);
        for chunk in pairs.chunks(FIT_CHUNK) {
            let (mut xs, mut ys) = build(chunk);
            for mut col in xs.column_iter_mut() {
                col -= &x_mean;
            }
            for mut col in ys.column_iter_mut() {
                col -= &y_mean;
            }
            gram.gemm_tr(1.0, &xs.transpose(), &xs.transpose(), 1.0);
            rhs.gemm_tr(1.0, &xs.transpose(), &ys.transpose(), 1.0);
        }
        let w_t = ridge_solve_normal(gram, &rhs, lambda)?;
        model.w = w_t.transpose();
        model.b = &y_mean - &model.w * &x_mean;
        Ok(model)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), "nlinear".into());
        metadata.insert("variant".into(), self.variant.name().into());
        metadata.insert("lookback".into(), self.lookback.to_string());
        metadata.insert("horizon".into(), self.horizon.to_string());
        metadata.insert("dim".into(), self.dim.to_string());
        Checkpoint {
            metadata,
            groups: vec![
                ("w".into(), self.w.as_slice().to_vec()),
                ("b".into(), self.b.as_slice().to_vec()),
            ],
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let bad = |m: String| Error::from(FormatError::BadMetadata(m));
        if ckpt.meta("model")? != "nlinear" {
            return Err(bad(format!("checkpoint holds model {:?}, not nlinear", ckpt.meta("model")?)));
        }
        let num = |k: &str| -> Result<usize> { ckpt.meta(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
        let variant = match ckpt.meta("variant")? {
            "a" => NLinearVariant::A,
            "b" => NLinearVariant::B,
            other => return Err(bad(format!("unknown variant {other:?}"))),
        };
        let (l, t, d) = (num("lookback")?, num("horizon")?, num("dim")?);
        let w = ckpt.group("w")?;
        if w.len() != l * d * t * d {
            return Err(bad(format!("weight group has {} values", w.len())));
        }
        let w = Matrix::from_column_slice(t * d, l * d, w);
        Self::new(l, t, d, variant, w, Vector::from_column_slice(ckpt.group("b")?))
    }
}

impl Forecaster for NLinear {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>> {
        let (p, d) = (self.lookback * self.dim, self.dim);
        if windows.len() != batch * p {
            return Err(Error::Shape(format!("expected {} window values, got {}", batch * p, windows.len())));
        }
        if horizon > self.horizon {
            return Err(Error::Shape(format!("model horizon {} < requested {horizon}", self.horizon)));
        }
        let mut feats = Matrix::zeros(p, batch);
        for (c, w) in windows.chunks_exact(p).enumerate() {
            self.features_into(w, feats.column_mut(c).as_mut_slice());
        }
        let rows = horizon * d;
        let mut y = self.w.rows(0, rows) * feats;
        for (c, w) in windows.chunks_exact(p).enumerate() {
            let last = &w[p - d..];
            for (k, v) in y.column_mut(c).iter_mut().enumerate() {
                *v = *v + self.b[k] + last[k % d];
            }
        }
        Ok(y.as_slice().to_vec())
    }

    fn param_count(&self) -> usize {
        self.count_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn published_parameter_counts() {
        assert_eq!(nlinear_param_count(96, 904, 17), 25_095_944);
        assert_eq!(nlinear_param_count(96, 1904, 3), 1_650_768);
        assert_eq!(nlinear_param_count(96, 1344, 1), 130_368);
        let m = NLinear::zeros(4, 3, 2, NLinearVariant::A).unwrap();
        assert_eq!(m.count_params(), nlinear_param_count(4, 3, 2));
    }

    #[test]
    fn zero_weights_repeat_last_state() {
        for variant in [NLinearVariant::A, NLinearVariant::B] {
            let m = NLinear::zeros(2, 3, 1, variant).unwrap();
            assert_eq!(m.forecast(&[5.0, 9.0], 1, 3).unwrap(), vec![9.0; 3]);
        }
    }

    #[test]
    fn hand_evaluation_variant_a() {
        let m = NLinear::new(1, 1, 1, NLinearVariant::A, Matrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        assert_eq!(m.forecast(&[3.0], 1, 1).unwrap(), vec![3.0]);
        let b = NLinear::new(1, 1, 1, NLinearVariant::B, Matrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        assert_eq!(b.forecast(&[3.0], 1, 1).unwrap(), vec![9.0]);
    }

    fn planted_set(rng: &mut Rng, planted: &NLinear, m: usize) -> TrajectorySet {
        let (l, t, d) = (planted.lookback, planted.horizon, planted.dim);
        let mut data = Vec::new();
        for _ in 0..m {
            let x: Vec<f64> = (0..l * d).map(|_| rng.normal()).collect();
            let y = planted.forecast(&x, 1, t).unwrap();
            data.extend(x);
            data.extend(y);
        }
        TrajectorySet::new((m, l + t, d), data, None).unwrap()
    }

    #[test]
    fn plant_and_recover() {
        let mut rng = Rng::new(3);
        let (l, t, d) = (3, 2, 2);
        let w_true = Matrix::from_fn(t * d, l * d, |_, _| rng.normal());
        let b_true = Vector::from_fn(t * d, |_, _| rng.normal());
        let planted = NLinear::new(l, t, d, NLinearVariant::B, w_true.clone(), b_true.clone()).unwrap();
        let set = planted_set(&mut rng, &planted, 60);
        let fit = NLinear::fit(&set, l, t, NLinearVariant::B, 0.0, FitWindows::First).unwrap();
        assert!((&fit.w - &w_true).amax() < 1e-8);
        assert!((&fit.b - &b_true).amax() < 1e-8);
    }

    #[test]
    fn plant_and_recover_variant_a() {
        let mut rng = Rng::new(4);
        let (l, t, d) = (3, 2, 2);
        let w_true = Matrix::from_fn(t * d, l * d, |_, _| rng.normal());
        let planted = NLinear::new(l, t, d, NLinearVariant::A, w_true.clone(), Vector::zeros(t * d)).unwrap();
        let set = planted_set(&mut rng, &planted, 60);
        // The last-state features are identically zero: singular without a penalty.
        assert!(NLinear::fit(&set, l, t, NLinearVariant::A, 0.0, FitWindows::First).unwrap_err().is_numerical());
        let fit = NLinear::fit(&set, l, t, NLinearVariant::A, 1e-12, FitWindows::First).unwrap();
        let free = (l - 1) * d;
        assert!((fit.w.columns(0, free) - w_true.columns(0, free)).amax() < 1e-8);
        let x: Vec<f64> = (0..l * d).map(|_| rng.normal()).collect();
        let (a, b) = (fit.forecast(&x, 1, t).unwrap(), planted.forecast(&x, 1, t).unwrap());
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-8));
    }

    #[test]
    fn constant_trajectories_fit_to_zero_map() {
        let data: Vec<f64> = [1.5; 10].into_iter().chain([-2.0; 10]).collect();
        let set = TrajectorySet::new((2, 10, 1), data, None).unwrap();
        let fit = NLinear::fit(&set, 4, 6, NLinearVariant::A, 1e-3, FitWindows::Strided(1)).unwrap();
        assert!(fit.w.amax() < 1e-12 && fit.b.amax() < 1e-12);
        assert_eq!(fit.forecast(&[3.0; 4], 1, 6).unwrap(), vec![3.0; 6]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Rng::new(5);
        let w = Matrix::from_fn(4, 6, |_, _| rng.normal());
        let m = NLinear::new(3, 2, 2, NLinearVariant::B, w, Vector::from_fn(4, |_, _| rng.normal())).unwrap();
        assert_eq!(NLinear::from_checkpoint(&m.to_checkpoint()).unwrap(), m);
    }
}
