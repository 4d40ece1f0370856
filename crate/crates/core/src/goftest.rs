//! One-sample Kolmogorov-Smirnov machinery and empirical power estimation.

use crate::error::{Error, Result};
use crate::randcore::SeedStream;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Outcome of a K-S test.
#[derive(Debug, Clone)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at: BTreeMap<String, bool>,
}

/// Supremum distance between the empirical cdf of `sample` and `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("ks_statistic requires a nonempty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f);
        d = d.max(f - i as f64 / n);
    }
    Ok(d)
}

/// Kolmogorov tail probability Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2),
/// truncated at j = 100.
pub fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample K-S test with asymptotic p-value.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<KsResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("ks_test requires alpha in (0,1), got {alpha}")));
    }
    let d = ks_statistic(sample, cdf)?;
    let n = sample.len() as f64;
    let p = kolmogorov_pvalue(n.sqrt() * d);
    let mut reject_at = BTreeMap::new();
    reject_at.insert(format!("{alpha}"), p < alpha);
    Ok(KsResult { statistic: d, p_value: p, reject_at })
}

/// Two-sample K-S p-value via the asymptotic series with effective sample
/// size nm/(n+m). Used internally for distributional-equivalence checks.
pub fn two_sample_ks_pvalue(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    kolmogorov_pvalue(ne.sqrt() * d)
}

/// Estimated rejection rate with its binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct PowerEstimate {
    pub power: f64,
    pub standard_error: f64,
    pub reps: usize,
}

/// Fraction of replicates on which the K-S test rejects at level `alpha`.
/// The generator receives a per-replicate stream derived from `stream`, so
/// the estimate is independent of the parallel schedule.
pub fn empirical_power<G>(
    generator: G,
    cdf: impl Fn(f64) -> f64 + Sync,
    alpha: f64,
    reps: usize,
    stream: &SeedStream,
) -> Result<PowerEstimate>
where
    G: Fn(&mut SeedStream) -> Result<Vec<f64>> + Sync,
{
    if reps == 0 {
        return Err(Error::invalid("empirical_power requires reps >= 1"));
    }
    let rejections = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut s = stream.child(&[rep as u64]);
            let sample = generator(&mut s)?;
            let r = ks_test(&sample, &cdf, alpha)?;
            Ok(usize::from(r.p_value < alpha))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    let p = rejections as f64 / reps as f64;
    Ok(PowerEstimate {
        power: p,
        standard_error: (p * (1.0 - p) / reps as f64).sqrt(),
        reps,
    })
}
