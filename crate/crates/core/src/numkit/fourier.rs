//! Discrete Fourier transforms.
//!
//! `dft` follows the unnormalized forward convention
//! `X_k = sum_j x_j exp(-2 pi i j k / n)`; `idft` carries the `1/n` factor so
//! that `idft(dft(x)) == x`. The transforms are backed by `rustfft`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("DFT of an empty vector".into()));
    }
    Ok(())
}

pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(x.len())?;
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    Ok(buf)
}

pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(x.len())?;
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_inverse(x.len()).process(&mut buf);
    let scale = 1.0 / x.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// Planned 1-D transforms of a fixed length, reused across time steps.
#[derive(Clone)]
pub struct Spectral1d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral1d {
    pub fn new(n: usize) -> Result<Self> {
        check_len(n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// Signed integer wavenumber of bin `k` (`k - n` above the midpoint).
    pub fn mode(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }
}

/// 2-D transform on a row-major `rows x cols` grid.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: Spectral1d,
    col_fft: Spectral1d,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            rows,
            cols,
            row_fft: Spectral1d::new(cols)?,
            col_fft: Spectral1d::new(rows)?,
        })
    }

    fn apply(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.rows * self.cols);
        for row in buf.chunks_exact_mut(self.cols) {
            if inverse {
                self.row_fft.inverse(row);
            } else {
                self.row_fft.forward(row);
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = buf[r * self.cols + c];
            }
            if inverse {
                self.col_fft.inverse(&mut column);
            } else {
                self.col_fft.forward(&mut column);
            }
            for r in 0..self.rows {
                buf[r * self.cols + c] = column[r];
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, true);
    }

    pub fn row_mode(&self, r: usize) -> i64 {
        self.col_fft.mode(r)
    }

    pub fn col_mode(&self, c: usize) -> i64 {
        self.row_fft.mode(c)
    }
}
