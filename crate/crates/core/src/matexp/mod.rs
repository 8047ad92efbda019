//! Matrix exponential machinery behind the linear latent dynamics:
//! `expm` and its Fréchet derivative, the delayed matrix exponential of
//! `h'(t) = A h(t - d)`, and the structured generator parametrization.

mod delayed;
mod expm;
mod generator;

pub use delayed::{delayed_expm, delayed_expm_grad};
pub use expm::{expm, expm_frechet, expm_frechet_adjoint};
pub use generator::{GeneratorClass, SkewDiagGenerator};
