//! Long-term time-series forecasting toolkit.
//!
//! * [`matexp`]: matrix exponential, Fréchet derivative, delayed exponential
//!   and the structured latent generator.
//! * [`linode`]: the solver-free linear latent ODE/DDE forecaster.
//! * [`baselines`]: NLinear, latent NLinear and persistence.
//! * [`dynsys`]: seeded synthetic dynamical-system datasets.
//! * [`dataio`]: the `LTSF-TENSOR` container, CSV import and normalization.
//! * [`bench`]: metrics, evaluation protocol, benchmark runner and reports.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod dataio;
pub mod dynsys;
pub mod error;
pub mod linode;
pub mod matexp;
pub mod numkit;
pub mod task;

pub use error::{Error, FormatError, Result};
