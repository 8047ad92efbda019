//! Shared numerical substrate: seeded randomness, discrete Fourier
//! transforms and ridge least squares.

pub mod fourier;
pub mod ridge;
pub mod rng;

pub use fourier::{dft, idft, Fft2, Spectral1d};
pub use ridge::{ridge_objective, ridge_solve, ridge_solve_normal};
pub use rng::{box_muller, mix64, Rng};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
pub use num_complex::Complex64;
