//! Distribution primitives: log-pdf, cdf, quantile for every family used by
//! the models and mechanisms. All sampling is quantile-driven, so a draw is a
//! deterministic transform of uniforms.

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_gamma, reg_inc_beta, std_normal_cdf, std_normal_quantile};

/// A validated parametric distribution.
///
/// Geometric uses the number-of-failures convention with support {0,1,2,...},
/// so its quantile degenerates to 0 as the success probability approaches 1.
/// Tulap(epsilon) is the difference of two such geometrics with success
/// probability 1 - exp(-epsilon), plus an independent Uniform(-1/2, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { location: f64, scale: f64 },
    Geometric { success_prob: f64 },
    Bernoulli { p: f64 },
    Binomial { trials: u64, p: f64 },
    Beta { alpha: f64, beta: f64 },
    BurrXII { c: f64, k: f64 },
    Tulap { epsilon: f64 },
}

impl DistSpec {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() {
            return Err(Error::invalid(format!("Normal requires sd > 0, got mean={mean}, sd={sd}")));
        }
        Ok(DistSpec::Normal { mean, sd })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("Uniform requires lo < hi, got [{lo}, {hi}]")));
        }
        Ok(DistSpec::Uniform { lo, hi })
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid(format!("Laplace requires scale > 0, got {scale}")));
        }
        Ok(DistSpec::Laplace { location, scale })
    }

    pub fn geometric(success_prob: f64) -> Result<Self> {
        if !(success_prob > 0.0 && success_prob <= 1.0) {
            return Err(Error::invalid(format!(
                "Geometric requires success_prob in (0,1], got {success_prob}"
            )));
        }
        Ok(DistSpec::Geometric { success_prob })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("Bernoulli requires p in [0,1], got {p}")));
        }
        Ok(DistSpec::Bernoulli { p })
    }

    pub fn binomial(trials: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("Binomial requires p in [0,1], got {p}")));
        }
        Ok(DistSpec::Binomial { trials, p })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::invalid(format!(
                "Beta requires alpha, beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(DistSpec::Beta { alpha, beta })
    }

    pub fn burr_xii(c: f64, k: f64) -> Result<Self> {
        if !(c > 0.0) || !(k > 0.0) {
            return Err(Error::invalid(format!("BurrXII requires c, k > 0, got ({c}, {k})")));
        }
        Ok(DistSpec::BurrXII { c, k })
    }

    pub fn tulap(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("Tulap requires epsilon > 0, got {epsilon}")));
        }
        Ok(DistSpec::Tulap { epsilon })
    }

    /// Natural log of the density (or mass) at x; -inf off the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            DistSpec::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistSpec::Laplace { location, scale } => {
                -(x - location).abs() / scale - (2.0 * scale).ln()
            }
            DistSpec::Geometric { success_prob } => {
                if x < 0.0 || x.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    x * (1.0 - success_prob).ln() + success_prob.ln()
                }
            }
            DistSpec::Bernoulli { p } => match x {
                v if v == 0.0 => (1.0 - p).ln(),
                v if v == 1.0 => p.ln(),
                _ => f64::NEG_INFINITY,
            },
            DistSpec::Binomial { trials, p } => {
                let n = trials as f64;
                if x < 0.0 || x > n || x.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_gamma(n + 1.0) - ln_gamma(x + 1.0) - ln_gamma(n - x + 1.0)
                        + x * p.ln()
                        + (n - x) * (1.0 - p).ln()
                }
            }
            DistSpec::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    f64::NEG_INFINITY
                } else {
                    (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta(alpha, beta)
                }
            }
            DistSpec::BurrXII { c, k } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    c.ln() + k.ln() + (c - 1.0) * x.ln() - (k + 1.0) * x.powf(c).ln_1p()
                }
            }
            DistSpec::Tulap { epsilon } => {
                // density at x is the two-sided-geometric mass at round(x)
                let b = (-epsilon).exp();
                let m = x.round().abs();
                ((1.0 - b) / (1.0 + b)).ln() + m * b.ln()
            }
        }
    }

    /// P(X <= x), clamped to [0,1].
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            DistSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistSpec::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            DistSpec::Geometric { success_prob } => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0 - (1.0 - success_prob).powf(x.floor() + 1.0)
                }
            }
            DistSpec::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            DistSpec::Binomial { trials, p } => {
                if x < 0.0 {
                    return 0.0;
                }
                let cap = (x.floor() as u64).min(trials);
                let mut pmf = (1.0 - p).powi(trials as i32);
                let mut acc = pmf;
                for j in 0..cap {
                    pmf *= (trials - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
                    acc += pmf;
                }
                acc.min(1.0)
            }
            DistSpec::Beta { alpha, beta } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    reg_inc_beta(alpha, beta, x).expect("validated parameters")
                }
            }
            DistSpec::BurrXII { c, k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-k * x.powf(c).ln_1p()).exp()
                }
            }
            DistSpec::Tulap { epsilon } => {
                let b = (-epsilon).exp();
                let k = x.round();
                // cdf of the discrete part at integer j
                let disc = |j: f64| -> f64 {
                    if j >= 0.0 {
                        1.0 - b.powf(j + 1.0) / (1.0 + b)
                    } else {
                        b.powf(-j) / (1.0 + b)
                    }
                };
                let mass_k = (1.0 - b) / (1.0 + b) * b.powf(k.abs());
                (disc(k - 1.0) + mass_k * (x - (k - 0.5))).clamp(0.0, 1.0)
            }
        }
    }

    /// Generalized inverse inf{x : cdf(x) >= u} for u in (0,1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::invalid(format!("quantile requires u in (0,1), got {u}")));
        }
        Ok(match *self {
            DistSpec::Normal { mean, sd } => mean + sd * std_normal_quantile(u)?,
            DistSpec::Uniform { lo, hi } => lo + u * (hi - lo),
            DistSpec::Laplace { location, scale } => {
                if u < 0.5 {
                    location + scale * (2.0 * u).ln()
                } else {
                    location - scale * (2.0 * (1.0 - u)).ln()
                }
            }
            DistSpec::Geometric { success_prob } => geometric_quantile(u, success_prob),
            DistSpec::Bernoulli { p } => {
                if u > 1.0 - p {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::Binomial { trials, p } => {
                if p == 0.0 {
                    return Ok(0.0);
                }
                if p == 1.0 {
                    return Ok(trials as f64);
                }
                // linear cdf scan with incrementally updated pmf
                let mut pmf = (1.0 - p).powi(trials as i32);
                let mut acc = pmf;
                let mut j = 0u64;
                while acc < u && j < trials {
                    pmf *= (trials - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
                    acc += pmf;
                    j += 1;
                }
                j as f64
            }
            DistSpec::Beta { alpha, beta } => beta_quantile(alpha, beta, u)?,
            DistSpec::BurrXII { c, k } => ((1.0 - u).powf(-1.0 / k) - 1.0).powf(1.0 / c),
            DistSpec::Tulap { .. } => {
                // piecewise-linear cdf: locate the integer cell, then invert
                // the linear piece
                let mut lo = -1.0f64;
                let mut hi = 1.0f64;
                while self.cdf(lo - 0.5) > u {
                    lo *= 2.0;
                }
                while self.cdf(hi + 0.5) < u {
                    hi *= 2.0;
                }
                let mut k = lo;
                while self.cdf(k + 0.5) < u {
                    k += 1.0;
                }
                let f_lo = self.cdf(k - 0.5);
                let f_hi = self.cdf(k + 0.5);
                k - 0.5 + (u - f_lo) / (f_hi - f_lo)
            }
        })
    }
}

fn geometric_quantile(u: f64, p: f64) -> f64 {
    if p == 1.0 {
        return 0.0;
    }
    // smallest g with 1 - (1-p)^(g+1) >= u
    let g = ((1.0 - u).ln() / (1.0 - p).ln()).ceil() - 1.0;
    g.max(0.0)
}

/// Tulap{0, exp(-epsilon), 0} draw as a deterministic function of three
/// uniforms: two geometric quantile transforms and a centered uniform.
pub fn tulap_from_uniforms(u1: f64, u2: f64, u3: f64, epsilon: f64) -> f64 {
    let p = 1.0 - (-epsilon).exp();
    geometric_quantile(u1, p) - geometric_quantile(u2, p) + (u3 - 0.5)
}

/// Safeguarded Newton on I_x(a,b) with a maintained bisection bracket,
/// tolerance 1e-12 in the cdf.
fn beta_quantile(a: f64, b: f64, u: f64) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut x = a / (a + b);
    let log_norm = -ln_beta(a, b);
    for _ in 0..200 {
        let f = reg_inc_beta(a, b, x)? - u;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if f.abs() < 1e-12 {
            return Ok(x);
        }
        let log_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + log_norm;
        let mut next = x - f / log_pdf.exp();
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-16 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
