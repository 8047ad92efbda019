use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng, Vector};

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vector,
}

/// Stack of dense layers with ELU between them (none after the last).
///
/// Batches are matrices with one sample per column. Parameters flatten
/// layer by layer as `W` in column-major order followed by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Activations retained by [`Mlp::forward_cached`] for the backward pass.
pub struct MlpCache {
    inputs: Vec<Matrix>,
}

impl MlpCache {
    /// Number of `f64` values held.
    pub fn footprint(&self) -> usize {
        self.inputs.iter().map(|m| m.len()).sum()
    }
}

impl Mlp {
    /// Layer widths `sizes[0] -> sizes[1] -> ...`, weights `U(-1/sqrt(in), 1/sqrt(in))`, zero biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|io| {
                let bound = 1.0 / (io[0] as f64).sqrt();
                let w = Matrix::from_fn(io[1], io[0], |_, _| rng.uniform(-bound, bound).expect("bound > 0"));
                Dense { w, b: Vector::zeros(io[1]) }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.w.nrows() != l.b.len() {
                return Err(Error::Shape(format!("layer {k}: weight rows {} vs bias {}", l.w.nrows(), l.b.len())));
            }
            if k > 0 && layers[k - 1].w.nrows() != l.w.ncols() {
                return Err(Error::Shape(format!("layer {k} input {} does not match previous output", l.w.ncols())));
            }
        }
        Ok(Self { layers })
    }

    pub fn affine(w: Matrix, b: Vector) -> Result<Self> {
        Self::from_layers(vec![Dense { w, b }])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            layers: vec![Dense {
                w: Matrix::identity(n, n),
                b: Vector::zeros(n),
            }],
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(|l| l.w.nrows()))
            .collect()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(l.b.as_slice());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Shape(format!("MLP has {} parameters, got {}", self.num_params(), p.len())));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.w.len(), l.b.len());
            l.w.as_mut_slice().copy_from_slice(&p[off..off + nw]);
            l.b.as_mut_slice().copy_from_slice(&p[off + nw..off + nw + nb]);
            off += nw + nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.nrows() != self.in_dim() {
            return Err(Error::Shape(format!("MLP expects {} inputs, got {}", self.in_dim(), x.nrows())));
        }
        Ok(())
    }

    fn layer(&self, k: usize, x: &Matrix) -> Matrix {
        let l = &self.layers[k];
        let mut z = &l.w * x;
        for mut col in z.column_iter_mut() {
            col += &l.b;
        }
        z
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = x.clone();
        for k in 0..self.layers.len() {
            h = self.layer(k, &h);
            if k + 1 < self.layers.len() {
                h.apply(|v| *v = elu(*v));
            }
        }
        Ok(h)
    }

    /// Forward pass keeping each layer's input; hidden layers store pre-activations.
    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, MlpCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len() * 2);
        inputs.push(x.clone());
        let mut h = x.clone();
        for k in 0..self.layers.len() {
            let z = self.layer(k, &h);
            if k + 1 < self.layers.len() {
                h = z.map(elu);
                inputs.push(z);
                inputs.push(h.clone());
            } else {
                h = z;
            }
        }
        Ok((h, MlpCache { inputs }))
    }

    /// Returns parameter gradients (in [`Mlp::params`] order) and the gradient
    /// with respect to the input batch.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Matrix) -> (Vec<f64>, Matrix) {
        let n = self.layers.len();
        let mut per_layer: Vec<(Matrix, Vector)> = Vec::with_capacity(n);
        let mut g = grad_out.clone();
        for k in (0..n).rev() {
            // inputs layout: [x, z_0, h_0, z_1, h_1, ...]; layer k reads h_{k-1} (or x).
            let input = &cache.inputs[if k == 0 { 0 } else { 2 * k }];
            let gw = &g * input.transpose();
            let gb = g.column_sum();
            let gin = self.layers[k].w.transpose() * &g;
            per_layer.push((gw, gb));
            g = if k > 0 {
                let z = &cache.inputs[2 * k - 1];
                gin.zip_map(z, |gv, zv| gv * elu_grad(zv))
            } else {
                gin
            };
        }
        per_layer.reverse();
        let mut grads = Vec::with_capacity(self.num_params());
        for (gw, gb) in per_layer {
            grads.extend_from_slice(gw.as_slice());
            grads.extend_from_slice(gb.as_slice());
        }
        (grads, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(m: &Mlp, x: &Matrix, target: &Matrix) -> f64 {
        (m.forward(x).unwrap() - target).norm_squared()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::new(4);
        let mut m = Mlp::new(&[3, 5, 4, 2], &mut rng).unwrap();
        let x = Matrix::from_fn(3, 6, |_, _| rng.normal());
        let t = Matrix::from_fn(2, 6, |_, _| rng.normal());
        let (y, cache) = m.forward_cached(&x).unwrap();
        let (grads, gx) = m.backward(&cache, &(2.0 * (y - &t)));
        let p0 = m.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] += h;
            m.set_params(&p).unwrap();
            let up = loss(&m, &x, &t);
            p[i] -= 2.0 * h;
            m.set_params(&p).unwrap();
            let down = loss(&m, &x, &t);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grads[i]).abs() < 1e-6 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", grads[i]);
        }
        m.set_params(&p0).unwrap();
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let up = loss(&m, &xp, &t);
            xp[i] -= 2.0 * h;
            let down = loss(&m, &xp, &t);
            assert!(((up - down) / (2.0 * h) - gx[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_and_zero_bias() {
        let m = Mlp::identity(3);
        let x = Matrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert_eq!(m.forward(&x).unwrap(), x);
        let z = Mlp::affine(Matrix::zeros(2, 3), Vector::from_vec(vec![4.0, 5.0])).unwrap();
        assert_eq!(z.forward(&x).unwrap().as_slice(), &[4.0, 5.0]);
    }

    #[test]
    fn param_round_trip() {
        let mut rng = Rng::new(1);
        let mut m = Mlp::new(&[2, 3, 1], &mut rng).unwrap();
        assert_eq!(m.num_params(), 2 * 3 + 3 + 3 + 1);
        let p: Vec<f64> = (0..m.num_params()).map(|v| v as f64).collect();
        m.set_params(&p).unwrap();
        assert_eq!(m.params(), p);
        assert!(m.set_params(&p[1..]).is_err());
        assert!(Mlp::from_layers(vec![]).is_err());
    }
}
