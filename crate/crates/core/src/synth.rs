//! The one-step synthetic-data engine and the fitted-model (parametric
//! bootstrap) baseline.
//!
//! One step: draw a uniform block once, sample Z at theta_hat_x, estimate
//! theta_hat_z, correct to theta_star = Proj(2 theta_hat_x - theta_hat_z),
//! and re-drive the *same* block through the sampler at theta_star. The block
//! is materialized up front, so Z and Y consume bitwise-identical uniforms.

use crate::error::{Error, Result};
use crate::models::{Dataset, Model};
use crate::randcore::SeedStream;

/// Synthetic sample plus the full audit record of the correction.
#[derive(Debug, Clone)]
pub struct SyntheticResult {
    pub data: Dataset,
    pub theta_hat_x: Vec<f64>,
    pub theta_hat_z: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub theta_hat_y: Vec<f64>,
    /// True iff the projection clamped any coordinate.
    pub projected: bool,
    /// True iff Z-estimation failed once and succeeded on the retry stream.
    pub retried: bool,
}

pub fn one_step(
    model: &dyn Model,
    theta_hat_x: &[f64],
    n: usize,
    stream: &mut SeedStream,
) -> Result<SyntheticResult> {
    if n == 0 {
        return Err(Error::invalid("one_step requires n >= 1"));
    }
    let k = model.uniforms_per_obs();
    let mut block = stream.uniform_block(n, k)?;
    let z = model.sample_from_seeds(theta_hat_x, &block)?;
    let mut retried = false;
    let theta_hat_z = match model.estimate(&z) {
        Ok(t) => t,
        Err(first) => {
            // rare small-n estimation failures: retry once on a fresh
            // sub-stream before giving up
            retried = true;
            let mut retry = stream.child(&[0x5245_5452]);
            block = retry.uniform_block(n, k)?;
            let z = model.sample_from_seeds(theta_hat_x, &block)?;
            model.estimate(&z).map_err(|_| first)?
        }
    };
    let raw: Vec<f64> = theta_hat_x
        .iter()
        .zip(&theta_hat_z)
        .map(|(x, z)| 2.0 * x - z)
        .collect();
    let theta_star = model.project(&raw);
    let projected = theta_star.iter().zip(&raw).any(|(a, b)| a != b);
    let data = model.sample_from_seeds(&theta_star, &block)?;
    let theta_hat_y = model.estimate(&data)?;
    Ok(SyntheticResult {
        data,
        theta_hat_x: theta_hat_x.to_vec(),
        theta_hat_z,
        theta_star,
        theta_hat_y,
        projected,
        retried,
    })
}

/// Plain fitted-model sample: Z_1..Z_n i.i.d. from f at theta_hat_x.
pub fn parametric_bootstrap(
    model: &dyn Model,
    theta_hat_x: &[f64],
    n: usize,
    stream: &mut SeedStream,
) -> Result<Dataset> {
    let block = stream.uniform_block(n, model.uniforms_per_obs())?;
    model.sample_from_seeds(theta_hat_x, &block)
}
