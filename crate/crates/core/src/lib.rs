//! Synthetic data for parametric models via a one-step corrected sampler,
//! with shared-seed sampling, DP mechanisms, goodness-of-fit utilities, and
//! a Metropolis baseline for runtime comparison.

pub mod dists;
pub mod dptest;
pub mod error;
pub mod experiment;
pub mod goftest;
pub mod mcmcbench;
pub mod models;
pub mod privacy;
pub mod randcore;
pub mod special;
pub mod synth;

pub use dists::DistSpec;
pub use error::{Error, Result};
pub use models::{Dataset, Model, ParamBox};
pub use randcore::{SeedStream, UniformBlock, DEFAULT_MASTER_SEED};
pub use synth::{one_step, parametric_bootstrap, SyntheticResult};
