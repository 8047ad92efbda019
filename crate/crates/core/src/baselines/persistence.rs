use crate::error::{Error, Result};
use crate::task::Forecaster;

/// Repeats the last lookback state over the whole horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Persistence {
    pub lookback: usize,
    pub dim: usize,
}

impl Persistence {
    pub fn new(lookback: usize, dim: usize) -> Result<Self> {
        if lookback == 0 || dim == 0 {
            return Err(Error::Config("persistence needs lookback >= 1 and dim >= 1".into()));
        }
        Ok(Self { lookback, dim })
    }
}

impl Forecaster for Persistence {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forecast(&self, windows: &[f64], batch: usize, horizon: usize) -> Result<Vec<f64>> {
        let width = self.lookback * self.dim;
        if windows.len() != batch * width {
            return Err(Error::Shape(format!("expected {} window values, got {}", batch * width, windows.len())));
        }
        let mut out = Vec::with_capacity(batch * horizon * self.dim);
        for w in windows.chunks_exact(width) {
            let last = &w[width - self.dim..];
            for _ in 0..horizon {
                out.extend_from_slice(last);
            }
        }
        Ok(out)
    }

    fn param_count(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_last_state() {
        let p = Persistence::new(2, 2).unwrap();
        let y = p.forecast(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 2, 2).unwrap();
        assert_eq!(y, vec![3.0, 4.0, 3.0, 4.0, 7.0, 8.0, 7.0, 8.0]);
    }
}
