use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Structural class of the latent generator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GeneratorClass {
    /// Dense `D x D` parameter block.
    Full,
    /// `K - K^T`: norm-preserving rotations.
    SkewOnly,
    /// `diag(d)`: independent exponential modes.
    DiagOnly,
    /// `K - K^T + diag(d)`.
    SkewPlusDiag,
}

impl GeneratorClass {
    pub fn num_params(self, dim: usize) -> usize {
        let skew = dim * dim.saturating_sub(1) / 2;
        match self {
            GeneratorClass::Full => dim * dim,
            GeneratorClass::SkewOnly => skew,
            GeneratorClass::DiagOnly => dim,
            GeneratorClass::SkewPlusDiag => skew + dim,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeneratorClass::Full => "full",
            GeneratorClass::SkewOnly => "skew_only",
            GeneratorClass::DiagOnly => "diag_only",
            GeneratorClass::SkewPlusDiag => "skew_plus_diag",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(GeneratorClass::Full),
            "skew_only" => Ok(GeneratorClass::SkewOnly),
            "diag_only" => Ok(GeneratorClass::DiagOnly),
            "skew_plus_diag" => Ok(GeneratorClass::SkewPlusDiag),
            other => Err(Error::Config(format!("unknown generator class {other:?}"))),
        }
    }
}

/// Parameters of the latent generator `A`.
///
/// Flat parameter layout:
/// * `skew_plus_diag`: the `D(D-1)/2` strictly-lower-triangular entries of
///   `K` in row-major order (`(1,0), (2,0), (2,1), (3,0), ...`), then the
///   `D` diagonal entries.
/// * `skew_only`: the strictly-lower block only.
/// * `diag_only`: the diagonal only.
/// * `full`: all `D^2` entries of `A`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewDiagGenerator {
    dim: usize,
    class: GeneratorClass,
    params: Vec<f64>,
}

impl SkewDiagGenerator {
    pub fn new(dim: usize, class: GeneratorClass, params: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("latent dimension must be positive".into()));
        }
        let expected = class.num_params(dim);
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "{} generator of dimension {dim} takes {expected} parameters, got {}",
                class.name(),
                params.len()
            )));
        }
        Ok(Self { dim, class, params })
    }

    /// Skew-plus-diagonal generator from separate blocks.
    pub fn skew_plus_diag(dim: usize, skew: &[f64], diag: &[f64]) -> Result<Self> {
        let mut params = skew.to_vec();
        params.extend_from_slice(diag);
        if skew.len() != dim * dim.saturating_sub(1) / 2 || diag.len() != dim {
            return Err(Error::Shape(format!(
                "dimension {dim} needs {} skew and {dim} diagonal parameters, got {} and {}",
                dim * dim.saturating_sub(1) / 2,
                skew.len(),
                diag.len()
            )));
        }
        Self::new(dim, GeneratorClass::SkewPlusDiag, params)
    }

    pub fn zeros(dim: usize, class: GeneratorClass) -> Result<Self> {
        Self::new(dim, class, vec![0.0; class.num_params(dim)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self) -> GeneratorClass {
        self.class
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Builds `A = K - K^T + diag(d)` (or the dense block for `full`).
    pub fn materialize(&self) -> Matrix {
        let n = self.dim;
        let mut a = Matrix::zeros(n, n);
        match self.class {
            GeneratorClass::Full => {
                a = Matrix::from_row_slice(n, n, &self.params);
            }
            GeneratorClass::SkewOnly | GeneratorClass::SkewPlusDiag => {
                let mut idx = 0;
                for i in 1..n {
                    for j in 0..i {
                        let k = self.params[idx];
                        a[(i, j)] = k;
                        a[(j, i)] = -k;
                        idx += 1;
                    }
                }
                if self.class == GeneratorClass::SkewPlusDiag {
                    for i in 0..n {
                        a[(i, i)] = self.params[idx + i];
                    }
                }
            }
            GeneratorClass::DiagOnly => {
                for i in 0..n {
                    a[(i, i)] = self.params[i];
                }
            }
        }
        a
    }

    /// Pulls a gradient with respect to the materialized matrix back onto the
    /// flat parameters.
    pub fn pullback(&self, grad_a: &Matrix) -> Vec<f64> {
        let n = self.dim;
        match self.class {
            GeneratorClass::Full => {
                let mut g = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        g.push(grad_a[(i, j)]);
                    }
                }
                g
            }
            GeneratorClass::DiagOnly => (0..n).map(|i| grad_a[(i, i)]).collect(),
            GeneratorClass::SkewOnly | GeneratorClass::SkewPlusDiag => {
                let mut g = Vec::with_capacity(self.params.len());
                for i in 1..n {
                    for j in 0..i {
                        g.push(grad_a[(i, j)] - grad_a[(j, i)]);
                    }
                }
                if self.class == GeneratorClass::SkewPlusDiag {
                    g.extend((0..n).map(|i| grad_a[(i, i)]));
                }
                g
            }
        }
    }
}
