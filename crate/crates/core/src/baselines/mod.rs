//! Linear baselines: NLinear in both variants, latent NLinear and persistence.

mod latent;
mod nlinear;
mod persistence;

pub use latent::{LatentNLinear, LatentNLinearConfig};
pub use nlinear::{nlinear_param_count, FitWindows, NLinear, NLinearVariant};
pub use persistence::Persistence;
