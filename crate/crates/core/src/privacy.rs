//! Differential-privacy mechanisms: the generic Laplace mechanism, the Tulap
//! count mechanism, and the efficient DP estimator for the beta family.

use crate::dists::{tulap_from_uniforms, DistSpec};
use crate::error::{Error, Result};
use crate::models::{beta_mle_from_stats, moments_start, Dataset};
use crate::randcore::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    Laplace,
    Tulap,
}

/// Privacy-loss budget and calibration inputs for a mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySpec {
    pub epsilon: f64,
    /// l1 sensitivity under one-record (Hamming-adjacent) changes.
    pub sensitivity: f64,
    pub mechanism: MechanismKind,
}

impl PrivacySpec {
    pub fn laplace(epsilon: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(Error::invalid(format!(
                "Laplace mechanism needs a finite positive sensitivity, got {sensitivity}"
            )));
        }
        Ok(PrivacySpec { epsilon, sensitivity, mechanism: MechanismKind::Laplace })
    }

    pub fn tulap(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(PrivacySpec { epsilon, sensitivity: 1.0, mechanism: MechanismKind::Tulap })
    }
}

/// Adds i.i.d. Laplace(0, sensitivity/epsilon) noise to each coordinate via
/// quantile transform of stream uniforms.
pub fn laplace_mechanism(t: &[f64], spec: &PrivacySpec, stream: &mut SeedStream) -> Result<Vec<f64>> {
    if spec.mechanism != MechanismKind::Laplace {
        return Err(Error::invalid("laplace_mechanism called with a non-Laplace spec"));
    }
    let noise = DistSpec::laplace(0.0, spec.sensitivity / spec.epsilon)?;
    t.iter()
        .map(|&v| Ok(v + noise.quantile(stream.next_uniform())?))
        .collect()
}

/// Clamping threshold t(n) = min(1/2, 10 / (log(n) sqrt(n))), natural log.
pub fn beta_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("beta_threshold requires n >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok((10.0 / (nf.ln() * nf.sqrt())).min(0.5))
}

/// Joint l1 sensitivity of the pair of clamped sufficient statistics,
/// Delta(t) = 2/n |log t - log(1-t)|.
pub fn beta_sensitivity(n: usize, t: f64) -> f64 {
    2.0 / n as f64 * (t.ln() - (1.0 - t).ln()).abs()
}

/// Epsilon-DP estimator of (alpha, beta) on [1, inf)^2.
///
/// Observations are clamped to [t, 1-t] with t = beta_threshold(n); one
/// Laplace draw per sufficient statistic, calibrated with the joint pair
/// sensitivity, keeps the total budget at epsilon. The projected-Newton
/// maximization is post-processing.
pub fn dp_beta_estimate(data: &Dataset, epsilon: f64, stream: &mut SeedStream) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let xs = data.scalar_values()?;
    if xs.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::domain("dp_beta_estimate requires observations in (0,1)"));
    }
    let n = xs.len();
    let t = beta_threshold(n)?;
    let clamped: Vec<f64> = xs.iter().map(|&x| x.clamp(t, 1.0 - t)).collect();
    let s1 = clamped.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
    let s2 = clamped.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / n as f64;
    let delta = beta_sensitivity(n, t);
    // at t = 1/2 every observation clamps to exactly 1/2, the statistics
    // carry no information about the data, and no noise is needed
    let noisy = if delta > 0.0 {
        let spec = PrivacySpec::laplace(epsilon, delta)?;
        laplace_mechanism(&[s1, s2], &spec, stream)?
    } else {
        vec![s1, s2]
    };
    let mean = clamped.iter().sum::<f64>() / n as f64;
    let var = clamped.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let (a, b) = beta_mle_from_stats(noisy[0], noisy[1], moments_start(mean, var))?;
    Ok(vec![a, b])
}

/// Noisy count: count + Tulap{0, exp(-epsilon), 0}.
pub fn tulap_mechanism(count: i64, epsilon: f64, stream: &mut SeedStream) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let (u1, u2, u3) = (stream.next_uniform(), stream.next_uniform(), stream.next_uniform());
    Ok(count as f64 + tulap_from_uniforms(u1, u2, u3, epsilon))
}
