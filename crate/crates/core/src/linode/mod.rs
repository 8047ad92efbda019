//! Linear latent ODE/DDE forecaster: encode the lookback window, propagate
//! the latent state with a matrix exponential, decode each horizon step.

mod adam;
mod mlp;
mod model;
mod train;

pub use adam::Adam;
pub use mlp::{Dense, Mlp, MlpCache};
pub use model::{GradMemory, LinOde, LinOdeConfig, MemoryTrace};
pub use train::{train, Curriculum, EpochRecord, TrainConfig, TrainOutcome, Trainable};
