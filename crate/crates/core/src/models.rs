//! Parametric model abstraction: a seeded sampler, an efficient estimator,
//! and a parameter box, plus the concrete families used by the studies.
//!
//! Every sampler consumes exactly `uniforms_per_obs` uniforms per observation
//! for every theta, so identical uniform blocks driven through two parameter
//! values stay aligned observation by observation.

use crate::dists::{tulap_from_uniforms, DistSpec};
use crate::error::{Error, Result};
use crate::randcore::UniformBlock;
use crate::special::{digamma, ln_beta, std_normal_quantile, trigamma};

/// A rectangular dataset. Scalar models use n rows by 1 column; the
/// log-linear model stores one row of 16 cell counts; the two-proportion
/// model stores one row holding the noisy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Dataset {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "dataset shape mismatch: {} values for {rows}x{cols}",
                values.len()
            )));
        }
        Ok(Dataset { values, rows, cols })
    }

    pub fn column(values: Vec<f64>) -> Result<Self> {
        let rows = values.len();
        Dataset::new(values, rows, 1)
    }

    pub fn single_row(values: Vec<f64>) -> Result<Self> {
        let cols = values.len();
        Dataset::new(values, 1, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The observations of a 1-column dataset.
    pub fn scalar_values(&self) -> Result<&[f64]> {
        if self.cols != 1 {
            return Err(Error::invalid(format!(
                "expected a scalar (1-column) dataset, got {} columns",
                self.cols
            )));
        }
        Ok(&self.values)
    }
}

/// Per-coordinate closed box defining the parameter space. Infinite bounds
/// are allowed.
pub type ParamBox = Vec<(f64, f64)>;

/// Euclidean projection onto a box: coordinate-wise clamp.
pub fn project(param_box: &ParamBox, theta: &[f64]) -> Vec<f64> {
    theta
        .iter()
        .zip(param_box)
        .map(|(&t, &(lo, hi))| t.clamp(lo, hi))
        .collect()
}

pub fn in_box(param_box: &ParamBox, theta: &[f64]) -> bool {
    theta.len() == param_box.len()
        && theta
            .iter()
            .zip(param_box)
            .all(|(&t, &(lo, hi))| t >= lo && t <= hi && t.is_finite())
}

/// A parametric family with a seeded sampler and an efficient estimator.
pub trait Model: Sync {
    fn name(&self) -> &'static str;
    fn param_dim(&self) -> usize;
    fn uniforms_per_obs(&self) -> usize;
    fn param_box(&self) -> ParamBox;

    /// Sampler body; inputs already validated by [`Model::sample_from_seeds`].
    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset>;

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>>;

    /// Deterministic-in-block sampler. Identical blocks and theta give
    /// identical datasets.
    fn sample_from_seeds(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        if !in_box(&self.param_box(), theta) {
            return Err(Error::domain(format!(
                "{}: theta {theta:?} outside parameter box",
                self.name()
            )));
        }
        if block.k() != self.uniforms_per_obs() {
            return Err(Error::invalid(format!(
                "{}: block has k={} but the model consumes {} uniforms per observation",
                self.name(),
                block.k(),
                self.uniforms_per_obs()
            )));
        }
        self.sample_inner(theta, block)
    }

    fn project(&self, theta: &[f64]) -> Vec<f64> {
        project(&self.param_box(), theta)
    }

    /// Reference cdf under f_theta, for scalar-valued models.
    fn reference_cdf(&self, _theta: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        Err(Error::Unsupported(format!(
            "{}: reference_cdf is only available for scalar models",
            self.name()
        )))
    }
}

// ---------------------------------------------------------------------------
// Normal location family, known unit variance

pub struct NormalLocation;

impl Model for NormalLocation {
    fn name(&self) -> &'static str {
        "normal-location"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn uniforms_per_obs(&self) -> usize {
        1
    }

    fn param_box(&self) -> ParamBox {
        vec![(f64::NEG_INFINITY, f64::INFINITY)]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        let mu = theta[0];
        let mut obs = Vec::with_capacity(block.n());
        for i in 0..block.n() {
            obs.push(mu + std_normal_quantile(block.get(i, 0))?);
        }
        Dataset::column(obs)
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        let xs = data.scalar_values()?;
        Ok(vec![xs.iter().sum::<f64>() / xs.len() as f64])
    }

    fn reference_cdf(&self, theta: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let d = DistSpec::normal(theta[0], 1.0)?;
        Ok(Box::new(move |x| d.cdf(x)))
    }
}

// ---------------------------------------------------------------------------
// Burr Type XII

pub struct BurrModel;

pub const BURR_FLOOR: f64 = 1e-8;

impl Model for BurrModel {
    fn name(&self) -> &'static str {
        "burr-xii"
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn uniforms_per_obs(&self) -> usize {
        1
    }

    fn param_box(&self) -> ParamBox {
        vec![(BURR_FLOOR, f64::INFINITY), (BURR_FLOOR, f64::INFINITY)]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        let d = DistSpec::burr_xii(theta[0], theta[1])?;
        let mut obs = Vec::with_capacity(block.n());
        for i in 0..block.n() {
            obs.push(d.quantile(block.get(i, 0))?);
        }
        Dataset::column(obs)
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        burr_mle(data.scalar_values()?)
    }

    fn reference_cdf(&self, theta: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let d = DistSpec::burr_xii(theta[0], theta[1])?;
        Ok(Box::new(move |x| d.cdf(x)))
    }
}

/// log(1 + x^c) and x^c/(1+x^c) * log(x), stable for large c*log(x).
#[inline]
fn burr_terms(log_x: f64, c: f64) -> (f64, f64) {
    let t = c * log_x;
    if t > 30.0 {
        (t, log_x)
    } else {
        let e = t.exp();
        (e.ln_1p(), e / (1.0 + e) * log_x)
    }
}

/// Profile MLE: k(c) = n / sum log(1+x^c), scalar root-find in c on the
/// profile score, bracketed in [1e-3, 1e3].
fn burr_mle(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len() as f64;
    if xs.iter().any(|&x| x <= 0.0) {
        return Err(Error::domain("burr-xii requires strictly positive observations"));
    }
    let log_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let sum_log: f64 = log_xs.iter().sum();

    // profile score in c after substituting k = n/T
    let score = |c: f64| -> f64 {
        let mut t = 0.0;
        let mut tp = 0.0;
        for &lx in &log_xs {
            let (a, b) = burr_terms(lx, c);
            t += a;
            tp += b;
        }
        n / c + sum_log - (n / t + 1.0) * tp
    };

    let (lo_lim, hi_lim) = (1e-3, 1e3);
    let mut lo = 1.0;
    let mut hi = 1.0;
    // expand geometrically until the score changes sign
    while score(lo) < 0.0 && lo > lo_lim {
        lo /= 2.0;
    }
    while score(hi) > 0.0 && hi < hi_lim {
        hi *= 2.0;
    }
    lo = lo.max(lo_lim);
    hi = hi.min(hi_lim);
    let (s_lo, s_hi) = (score(lo), score(hi));
    if s_lo < 0.0 || s_hi > 0.0 {
        return Err(Error::Estimation {
            context: "burr-xii profile score has no sign change in [1e-3, 1e3]".into(),
            iterations: 0,
            gradient_norm: s_lo.abs().max(s_hi.abs()),
            last_iterate: vec![lo, hi],
        });
    }
    // Newton with numeric derivative, falling back to bisection
    let mut c = 0.5 * (lo + hi);
    for iter in 0..200 {
        let s = score(c);
        if s > 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        if s.abs() < 1e-11 * n || hi - lo < 1e-13 * c {
            break;
        }
        let h = 1e-6 * c;
        let ds = (score(c + h) - score(c - h)) / (2.0 * h);
        let mut next = c - s / ds;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        c = next;
        if iter == 199 {
            return Err(Error::Estimation {
                context: "burr-xii profile Newton did not converge".into(),
                iterations: 200,
                gradient_norm: s.abs(),
                last_iterate: vec![c],
            });
        }
    }
    let t: f64 = log_xs.iter().map(|&lx| burr_terms(lx, c).0).sum();
    Ok(vec![c, n / t])
}

// ---------------------------------------------------------------------------
// Beta, parameter box [1, inf)^2

pub struct BetaModel;

impl Model for BetaModel {
    fn name(&self) -> &'static str {
        "beta"
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn uniforms_per_obs(&self) -> usize {
        1
    }

    fn param_box(&self) -> ParamBox {
        vec![(1.0, f64::INFINITY), (1.0, f64::INFINITY)]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        let d = DistSpec::beta(theta[0], theta[1])?;
        let mut obs = Vec::with_capacity(block.n());
        for i in 0..block.n() {
            obs.push(d.quantile(block.get(i, 0))?);
        }
        Dataset::column(obs)
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        let xs = data.scalar_values()?;
        if xs.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::domain("beta requires observations strictly inside (0,1)"));
        }
        let n = xs.len() as f64;
        let s1 = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
        let s2 = xs.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / n;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let (a, b) = beta_mle_from_stats(s1, s2, moments_start(mean, var))?;
        Ok(vec![a, b])
    }

    fn reference_cdf(&self, theta: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let d = DistSpec::beta(theta[0], theta[1])?;
        Ok(Box::new(move |x| d.cdf(x)))
    }
}

/// Method-of-moments starting point, projected into [1, inf)^2.
pub fn moments_start(mean: f64, var: f64) -> (f64, f64) {
    let var = var.max(1e-12);
    let common = (mean * (1.0 - mean) / var - 1.0).max(0.0);
    ((mean * common).max(1.0), ((1.0 - mean) * common).max(1.0))
}

/// Maximizes (alpha-1)s1 + (beta-1)s2 - log B(alpha, beta) over [1, inf)^2
/// by projected Newton with digamma/trigamma, step halving up to 50 times.
///
/// `s1` and `s2` are the per-observation sufficient statistics mean log X and
/// mean log(1-X), possibly privatized.
pub fn beta_mle_from_stats(s1: f64, s2: f64, start: (f64, f64)) -> Result<(f64, f64)> {
    let obj = |a: f64, b: f64| (a - 1.0) * s1 + (b - 1.0) * s2 - ln_beta(a, b);
    let grad = |a: f64, b: f64| {
        let dab = digamma(a + b);
        [s1 - digamma(a) + dab, s2 - digamma(b) + dab]
    };
    let (mut a, mut b) = (start.0.max(1.0), start.1.max(1.0));
    let mut g = grad(a, b);
    for iter in 0..200 {
        // KKT: at the lower bound an outward-pointing gradient is inactive
        let active0 = !(a <= 1.0 && g[0] < 0.0);
        let active1 = !(b <= 1.0 && g[1] < 0.0);
        let g0 = if active0 { g[0] } else { 0.0 };
        let g1 = if active1 { g[1] } else { 0.0 };
        if (g0 * g0 + g1 * g1).sqrt() < 1e-11 {
            return Ok((a, b));
        }
        let tab = trigamma(a + b);
        let h00 = -trigamma(a) + tab;
        let h11 = -trigamma(b) + tab;
        let det = h00 * h11 - tab * tab;
        // Newton direction for the active coordinates
        let (mut da, mut db) = if active0 && active1 && det.abs() > 1e-300 {
            (-(h11 * g[0] - tab * g[1]) / det, -(h00 * g[1] - tab * g[0]) / det)
        } else if active0 {
            (-g[0] / h00, 0.0)
        } else if active1 {
            (0.0, -g[1] / h11)
        } else {
            (0.0, 0.0)
        };
        if !da.is_finite() || !db.is_finite() {
            da = g0;
            db = g1;
        }
        let f0 = obj(a, b);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let (na, nb) = ((a + step * da).max(1.0), (b + step * db).max(1.0));
            if obj(na, nb) > f0 - 1e-15 {
                let moved = (na - a).abs().max((nb - b).abs());
                a = na;
                b = nb;
                accepted = true;
                if moved < 1e-12 * (1.0 + a + b) {
                    return Ok((a, b));
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // gradient ascent fallback
            let mut step = 1.0;
            loop {
                let (na, nb) = ((a + step * g0).max(1.0), (b + step * g1).max(1.0));
                if obj(na, nb) > f0 {
                    a = na;
                    b = nb;
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    return Ok((a, b));
                }
            }
        }
        g = grad(a, b);
        if iter == 199 {
            let p0 = if a <= 1.0 && g[0] < 0.0 { 0.0 } else { g[0] };
            let p1 = if b <= 1.0 && g[1] < 0.0 { 0.0 } else { g[1] };
            let pnorm = (p0 * p0 + p1 * p1).sqrt();
            if pnorm < 1e-7 {
                return Ok((a, b));
            }
            return Err(Error::Estimation {
                context: "beta likelihood Newton did not converge".into(),
                iterations: 200,
                gradient_norm: pnorm,
                last_iterate: vec![a, b],
            });
        }
    }
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// Bernoulli(theta) + Uniform(0,1) convolution, k = 2

pub struct BernoulliUniform;

impl Model for BernoulliUniform {
    fn name(&self) -> &'static str {
        "bernoulli-uniform"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn uniforms_per_obs(&self) -> usize {
        2
    }

    fn param_box(&self) -> ParamBox {
        vec![(0.0, 1.0)]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        let p = theta[0];
        let mut obs = Vec::with_capacity(block.n());
        for i in 0..block.n() {
            let w = if block.get(i, 0) > 1.0 - p { 1.0 } else { 0.0 };
            obs.push(w + block.get(i, 1));
        }
        Dataset::column(obs)
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        let xs = data.scalar_values()?;
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        Ok(vec![(mean - 0.5).clamp(0.0, 1.0)])
    }

    fn reference_cdf(&self, theta: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let p = theta[0];
        Ok(Box::new(move |x: f64| {
            (1.0 - p) * x.clamp(0.0, 1.0) + p * (x - 1.0).clamp(0.0, 1.0)
        }))
    }
}

// ---------------------------------------------------------------------------
// Linear regression with fixed design, unit noise variance

pub struct RegressionModel {
    design: Vec<f64>,
    n: usize,
    d: usize,
}

impl RegressionModel {
    pub fn new(design: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if design.len() != n * d || n < d || d == 0 {
            return Err(Error::invalid(format!(
                "design must be n x d with n >= d, got {} values for {n}x{d}",
                design.len()
            )));
        }
        Ok(RegressionModel { design, n, d })
    }

    /// Standard-normal design generated from a seed stream.
    pub fn gaussian_design(n: usize, d: usize, stream: &mut crate::randcore::SeedStream) -> Result<Self> {
        let mut design = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            design.push(std_normal_quantile(stream.next_uniform())?);
        }
        RegressionModel::new(design, n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.d..(i + 1) * self.d]
    }

    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(beta).map(|(z, b)| z * b).sum())
            .collect()
    }

    /// Z^T v for a length-n vector.
    pub fn t_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for i in 0..self.n {
            let row = self.row(i);
            for j in 0..self.d {
                out[j] += row[j] * v[i];
            }
        }
        out
    }
}

impl Model for RegressionModel {
    fn name(&self) -> &'static str {
        "linear-regression"
    }

    fn param_dim(&self) -> usize {
        self.d
    }

    fn uniforms_per_obs(&self) -> usize {
        1
    }

    fn param_box(&self) -> ParamBox {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.d]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        if block.n() != self.n {
            return Err(Error::invalid(format!(
                "regression sampler needs one row per design row ({} != {})",
                block.n(),
                self.n
            )));
        }
        let mean = self.predict(theta);
        let mut obs = Vec::with_capacity(self.n);
        for i in 0..self.n {
            obs.push(mean[i] + std_normal_quantile(block.get(i, 0))?);
        }
        Dataset::column(obs)
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        let y = data.scalar_values()?;
        if y.len() != self.n {
            return Err(Error::invalid("response length does not match the design"));
        }
        // normal equations, Cholesky solve
        let d = self.d;
        let mut ztz = vec![0.0; d * d];
        for i in 0..self.n {
            let row = self.row(i);
            for a in 0..d {
                for b in 0..d {
                    ztz[a * d + b] += row[a] * row[b];
                }
            }
        }
        let zty = self.t_apply(y);
        solve_spd(&ztz, &zty, d)
    }
}

/// Solves A x = b for symmetric positive-definite A (row-major d x d).
pub fn solve_spd(a: &[f64], b: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::invalid("matrix not positive definite"));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in i + 1..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Hierarchical log-linear model with all two-way interactions, 2^4 table

pub mod loglinear;
pub use loglinear::LogLinearModel;

// ---------------------------------------------------------------------------
// Tulap two-sample proportion model: one "observation" is the noisy pair

pub struct TulapTwoSample {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
}

impl TulapTwoSample {
    pub fn new(n: usize, m: usize, epsilon: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("sample sizes must be at least 1"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(TulapTwoSample { n, m, epsilon })
    }
}

impl Model for TulapTwoSample {
    fn name(&self) -> &'static str {
        "tulap-two-sample"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn uniforms_per_obs(&self) -> usize {
        8
    }

    fn param_box(&self) -> ParamBox {
        vec![(0.0, 1.0)]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        if block.n() != 1 {
            return Err(Error::invalid("the two-sample model is a single-observation dataset"));
        }
        let p = theta[0];
        let u = block.row(0);
        let bx = DistSpec::binomial(self.n as u64, p)?;
        let by = DistSpec::binomial(self.m as u64, p)?;
        let x = bx.quantile(u[0])? + tulap_from_uniforms(u[1], u[2], u[3], self.epsilon);
        let y = by.quantile(u[4])? + tulap_from_uniforms(u[5], u[6], u[7], self.epsilon);
        Dataset::single_row(vec![x, y])
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.rows() != 1 || data.cols() != 2 {
            return Err(Error::invalid("expected a single (x, y) pair"));
        }
        let total = data.get(0, 0) + data.get(0, 1);
        Ok(vec![(total / (self.n + self.m) as f64).clamp(0.0, 1.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randcore::SeedStream;

    #[test]
    fn normal_location_is_quantile_shift() {
        let mut s = SeedStream::derive(20240, &[1]);
        let block = s.uniform_block(50, 1).unwrap();
        let data = NormalLocation.sample_from_seeds(&[2.5], &block).unwrap();
        for i in 0..50 {
            let expect = 2.5 + std_normal_quantile(block.get(i, 0)).unwrap();
            assert!((data.get(i, 0) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn burr_sampler_matches_quantile() {
        let mut s = SeedStream::derive(20240, &[2]);
        let block = s.uniform_block(40, 1).unwrap();
        let d = DistSpec::burr_xii(2.0, 4.0).unwrap();
        let data = BurrModel.sample_from_seeds(&[2.0, 4.0], &block).unwrap();
        for i in 0..40 {
            assert_eq!(data.get(i, 0), d.quantile(block.get(i, 0)).unwrap());
        }
    }

    #[test]
    fn bernoulli_uniform_fractional_parts_theta_invariant() {
        let mut s = SeedStream::derive(20240, &[3]);
        let block = s.uniform_block(100, 2).unwrap();
        let a = BernoulliUniform.sample_from_seeds(&[0.2], &block).unwrap();
        let b = BernoulliUniform.sample_from_seeds(&[0.9], &block).unwrap();
        for i in 0..100 {
            // adding the integer part can round away the lowest mantissa bit
            assert!((a.get(i, 0).fract() - b.get(i, 0).fract()).abs() < 1e-15);
            assert!((a.get(i, 0).fract() - block.get(i, 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn tulap_two_sample_estimator_arithmetic() {
        let m = TulapTwoSample::new(200, 200, 1.0).unwrap();
        let data = Dataset::single_row(vec![70.2, 50.1]).unwrap();
        let t = m.estimate(&data).unwrap();
        assert!((t[0] - 0.30075).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_uniform_estimator_clamps() {
        let data = Dataset::column(vec![1.5; 20]).unwrap();
        let t = BernoulliUniform.estimate(&data).unwrap();
        assert_eq!(t[0], 1.0);
    }

    #[test]
    fn burr_mle_consistent_on_large_sample() {
        let mut s = SeedStream::derive(20240, &[4]);
        let block = s.uniform_block(100_000, 1).unwrap();
        let data = BurrModel.sample_from_seeds(&[2.0, 4.0], &block).unwrap();
        let t = BurrModel.estimate(&data).unwrap();
        let err = ((t[0] - 2.0).powi(2) + (t[1] - 4.0).powi(2)).sqrt();
        assert!(err < 0.05, "MLE {t:?} too far from (2,4): {err}");
    }

    #[test]
    fn burr_mle_beats_nearby_grid() {
        // grid-refinement oracle: the log-likelihood at the MLE must top a
        // local grid around it
        let mut s = SeedStream::derive(20240, &[5]);
        let block = s.uniform_block(2_000, 1).unwrap();
        let data = BurrModel.sample_from_seeds(&[2.0, 4.0], &block).unwrap();
        let xs = data.scalar_values().unwrap().to_vec();
        let loglik = |c: f64, k: f64| {
            let d = DistSpec::burr_xii(c, k).unwrap();
            xs.iter().map(|&x| d.log_pdf(x)).sum::<f64>()
        };
        let t = BurrModel.estimate(&data).unwrap();
        let best = loglik(t[0], t[1]);
        for dc in [-0.05, -0.01, 0.01, 0.05] {
            for dk in [-0.1, -0.02, 0.02, 0.1] {
                assert!(best >= loglik(t[0] + dc, t[1] + dk));
            }
        }
    }

    #[test]
    fn burr_mle_zero_gradient() {
        let mut s = SeedStream::derive(20240, &[6]);
        let n = 5_000;
        let block = s.uniform_block(n, 1).unwrap();
        let data = BurrModel.sample_from_seeds(&[2.0, 4.0], &block).unwrap();
        let t = BurrModel.estimate(&data).unwrap();
        let (c, k) = (t[0], t[1]);
        let xs = data.scalar_values().unwrap();
        let mut gc = n as f64 / c;
        let mut gk = n as f64 / k;
        for &x in xs {
            let (l1p, ratio_lx) = burr_terms(x.ln(), c);
            gc += x.ln() - (k + 1.0) * ratio_lx;
            gk -= l1p;
        }
        let norm = (gc * gc + gk * gk).sqrt();
        assert!(norm < 1e-8 * n as f64, "gradient norm {norm}");
    }

    #[test]
    fn beta_mle_zero_gradient_and_consistency() {
        let mut s = SeedStream::derive(20240, &[7]);
        let n = 20_000usize;
        let block = s.uniform_block(n, 1).unwrap();
        let data = BetaModel.sample_from_seeds(&[5.0, 3.0], &block).unwrap();
        let t = BetaModel.estimate(&data).unwrap();
        assert!(((t[0] - 5.0).powi(2) + (t[1] - 3.0).powi(2)).sqrt() < 0.2, "{t:?}");
        let xs = data.scalar_values().unwrap();
        let s1 = xs.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
        let s2 = xs.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / n as f64;
        let dab = digamma(t[0] + t[1]);
        let g = [s1 - digamma(t[0]) + dab, s2 - digamma(t[1]) + dab];
        let norm = n as f64 * (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!(norm < 1e-8 * n as f64, "gradient norm {norm}");
    }

    #[test]
    fn ols_residual_orthogonality() {
        let mut s = SeedStream::derive(20240, &[8]);
        let model = RegressionModel::gaussian_design(200, 5, &mut s).unwrap();
        let block = s.uniform_block(200, 1).unwrap();
        let data = model
            .sample_from_seeds(&[0.2, 0.2, 0.2, 0.2, 0.2], &block)
            .unwrap();
        let beta = model.estimate(&data).unwrap();
        let fitted = model.predict(&beta);
        let resid: Vec<f64> = data
            .scalar_values()
            .unwrap()
            .iter()
            .zip(&fitted)
            .map(|(y, f)| y - f)
            .collect();
        let g = model.t_apply(&resid);
        assert!(g.iter().all(|v| v.abs() < 1e-8), "Z'(y - Zb) = {g:?}");
    }

    #[test]
    fn projection_clamps_into_box() {
        assert_eq!(BetaModel.project(&[0.7, 2.3]), vec![1.0, 2.3]);
        assert_eq!(BetaModel.project(&[1.4, 2.3]), vec![1.4, 2.3]);
        assert_eq!(BernoulliUniform.project(&[1.04]), vec![1.0]);
    }

    #[test]
    fn out_of_box_theta_rejected() {
        let mut s = SeedStream::derive(20240, &[9]);
        let block = s.uniform_block(5, 1).unwrap();
        assert!(BetaModel.sample_from_seeds(&[0.5, 2.0], &block).is_err());
        let block2 = s.uniform_block(5, 2).unwrap();
        assert!(BurrModel.sample_from_seeds(&[2.0, 4.0], &block2).is_err());
    }

    #[test]
    fn normal_estimator_efficiency_proxy() {
        // n Var(mean) should be about 1 over seeded replicates
        let stream = SeedStream::derive(20240, &[10]);
        let n = 100;
        let reps = 5_000u64;
        let mut estimates = Vec::with_capacity(reps as usize);
        for rep in 0..reps {
            let mut s = stream.child(&[rep]);
            let block = s.uniform_block(n, 1).unwrap();
            let data = NormalLocation.sample_from_seeds(&[0.0], &block).unwrap();
            estimates.push(NormalLocation.estimate(&data).unwrap()[0]);
        }
        let mean = estimates.iter().sum::<f64>() / reps as f64;
        let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / reps as f64;
        let scaled = n as f64 * var;
        assert!((0.9..=1.1).contains(&scaled), "n Var = {scaled}");
    }

    #[test]
    fn reference_cdfs() {
        let burr = BurrModel.reference_cdf(&[2.0, 4.0]).unwrap();
        assert!((burr(1.0) - 0.9375).abs() < 1e-12);
        let norm = NormalLocation.reference_cdf(&[1.0]).unwrap();
        assert!((norm(1.0) - 0.5).abs() < 1e-12);
        let beta = BetaModel.reference_cdf(&[5.0, 3.0]).unwrap();
        assert!((beta(0.5) - crate::special::reg_inc_beta(5.0, 3.0, 0.5).unwrap()).abs() < 1e-12);
        assert!(TulapTwoSample::new(10, 10, 1.0).unwrap().reference_cdf(&[0.5]).is_err());
    }
}
