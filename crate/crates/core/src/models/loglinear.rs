//! Hierarchical log-linear model for a 2x2x2x2 contingency table with all
//! one-way effects and two-way interactions, fitted by iterative proportional
//! fitting on the two-way margins.
//!
//! Cells are ordered as the seatbelt table prints them: Gender (Female,
//! Male) x Location (Urban, Rural) x Seatbelt (No, Yes) x Injury (No, Yes),
//! the last factor varying fastest. Coefficients use dummy coding with the
//! last level of each factor as baseline, so the indicator is 1 on the first
//! level; the coefficient vector is
//! `[intercept, G, L, S, I, GL, GS, GI, LS, LI, SI]`.

use super::{Dataset, Model, ParamBox};
use crate::error::{Error, Result};
use crate::randcore::UniformBlock;

pub const CELLS: usize = 16;
pub const COEFFS: usize = 11;

const FACTORS: usize = 4;
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Indicator of the first level of `factor` in `cell` (bit 3 is Gender, bit
/// 0 is Injury; bit value 0 means first level).
#[inline]
fn indicator(cell: usize, factor: usize) -> usize {
    let bit = FACTORS - 1 - factor;
    usize::from(cell >> bit & 1 == 0)
}

pub struct LogLinearModel;

impl LogLinearModel {
    /// Cell probabilities from the coefficient vector (softmax of the linear
    /// predictor; the intercept cancels in the normalization).
    pub fn cell_probs(theta: &[f64]) -> Result<[f64; CELLS]> {
        if theta.len() != COEFFS {
            return Err(Error::invalid(format!("expected {COEFFS} coefficients, got {}", theta.len())));
        }
        let mut eta = [0.0; CELLS];
        for (cell, e) in eta.iter_mut().enumerate() {
            let d: [usize; 4] = std::array::from_fn(|f| indicator(cell, f));
            let mut v = theta[0];
            for f in 0..FACTORS {
                v += theta[1 + f] * d[f] as f64;
            }
            for (k, &(a, b)) in PAIRS.iter().enumerate() {
                v += theta[5 + k] * (d[a] * d[b]) as f64;
            }
            *e = v;
        }
        let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; CELLS];
        let mut z = 0.0;
        for (cell, e) in eta.iter().enumerate() {
            p[cell] = (e - max).exp();
            z += p[cell];
        }
        for v in &mut p {
            *v /= z;
        }
        Ok(p)
    }

    /// Dummy-coded coefficients of a probability vector that satisfies the
    /// two-way model (as IPF fits do). Exact inverse of [`Self::cell_probs`]
    /// up to the intercept normalization.
    pub fn coefficients(probs: &[f64]) -> Result<[f64; COEFFS]> {
        if probs.len() != CELLS {
            return Err(Error::invalid("expected 16 cell probabilities"));
        }
        if probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::domain("cell probabilities must be strictly positive"));
        }
        // cell index with indicator 1 exactly on the given factors
        let cell_for = |on: &[usize]| -> usize {
            let mut cell = (1 << FACTORS) - 1;
            for &f in on {
                cell &= !(1 << (FACTORS - 1 - f));
            }
            cell
        };
        let lp: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let mut theta = [0.0; COEFFS];
        theta[0] = lp[cell_for(&[])];
        for f in 0..FACTORS {
            theta[1 + f] = lp[cell_for(&[f])] - theta[0];
        }
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            theta[5 + k] = lp[cell_for(&[a, b])] - theta[0] - theta[1 + a] - theta[1 + b];
        }
        Ok(theta)
    }

    /// Two-way margin of `table` for a factor pair, as a 2x2 array indexed by
    /// the two indicators.
    fn margin(table: &[f64], a: usize, b: usize) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (cell, &v) in table.iter().enumerate() {
            m[indicator(cell, a)][indicator(cell, b)] += v;
        }
        m
    }

    /// Multinomial MLE of the cell probabilities by IPF on all two-way
    /// margins. Zero observed margins get a 0.5-per-cell count correction so
    /// the coefficients stay finite.
    pub fn fit_probs(counts: &[f64]) -> Result<[f64; CELLS]> {
        if counts.len() != CELLS {
            return Err(Error::invalid("expected 16 cell counts"));
        }
        if counts.iter().any(|&c| c < 0.0 || c.fract() != 0.0) {
            return Err(Error::invalid("cell counts must be non-negative integers"));
        }
        let mut counts: Vec<f64> = counts.to_vec();
        let any_zero_margin = PAIRS
            .iter()
            .any(|&(a, b)| Self::margin(&counts, a, b).iter().flatten().any(|&m| m == 0.0));
        if any_zero_margin {
            for c in &mut counts {
                *c += 0.5;
            }
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("empty table"));
        }
        let observed: Vec<f64> = counts.iter().map(|c| c / total).collect();

        let mut p = [1.0 / CELLS as f64; CELLS];
        for _sweep in 0..10_000 {
            for &(a, b) in &PAIRS {
                let target = Self::margin(&observed, a, b);
                let fitted = Self::margin(&p, a, b);
                for (cell, v) in p.iter_mut().enumerate() {
                    let (i, j) = (indicator(cell, a), indicator(cell, b));
                    *v *= target[i][j] / fitted[i][j];
                }
            }
            let worst = PAIRS
                .iter()
                .map(|&(a, b)| {
                    let t = Self::margin(&observed, a, b);
                    let f = Self::margin(&p, a, b);
                    (0..2)
                        .flat_map(|i| (0..2).map(move |j| (t[i][j] - f[i][j]).abs()))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if worst < 1e-12 {
                return Ok(p);
            }
        }
        Err(Error::Estimation {
            context: "IPF did not reach margin tolerance in 10^4 sweeps".into(),
            iterations: 10_000,
            gradient_norm: f64::NAN,
            last_iterate: p.to_vec(),
        })
    }
}

impl Model for LogLinearModel {
    fn name(&self) -> &'static str {
        "loglinear-two-way"
    }

    fn param_dim(&self) -> usize {
        COEFFS
    }

    fn uniforms_per_obs(&self) -> usize {
        1
    }

    fn param_box(&self) -> ParamBox {
        vec![(f64::NEG_INFINITY, f64::INFINITY); COEFFS]
    }

    fn sample_inner(&self, theta: &[f64], block: &UniformBlock) -> Result<Dataset> {
        let probs = Self::cell_probs(theta)?;
        let mut cum = [0.0; CELLS];
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            cum[i] = acc;
        }
        cum[CELLS - 1] = 1.0;
        let mut counts = [0.0; CELLS];
        for i in 0..block.n() {
            let u = block.get(i, 0);
            let cell = cum.partition_point(|&c| c < u).min(CELLS - 1);
            counts[cell] += 1.0;
        }
        Dataset::single_row(counts.to_vec())
    }

    fn estimate(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.rows() != 1 || data.cols() != CELLS {
            return Err(Error::invalid("expected a single row of 16 cell counts"));
        }
        let probs = Self::fit_probs(data.values())?;
        Ok(Self::coefficients(&probs)?.to_vec())
    }
}

/// The seatbelt contingency table shipped with the crate: 16 cells in print
/// order (Gender x Location x Seatbelt x Injury), 68,694 passengers total.
pub fn seatbelt_counts() -> Vec<f64> {
    let raw = include_str!("../../resources/seatbelt.csv");
    raw.lines()
        .skip(1)
        .map(|line| {
            line.rsplit(',')
                .next()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .expect("malformed seatbelt resource")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randcore::SeedStream;

    #[test]
    fn seatbelt_resource_as_printed() {
        let counts = seatbelt_counts();
        assert_eq!(
            counts,
            vec![
                7287.0, 996.0, 11587.0, 759.0, 3246.0, 973.0, 6134.0, 757.0, 10381.0, 812.0,
                10969.0, 380.0, 6123.0, 1084.0, 6693.0, 513.0
            ]
        );
        assert_eq!(counts.iter().sum::<f64>(), 68_694.0);
    }

    #[test]
    fn ipf_matches_two_way_margins() {
        let counts = seatbelt_counts();
        let total: f64 = counts.iter().sum();
        let p = LogLinearModel::fit_probs(&counts).unwrap();
        for &(a, b) in &PAIRS {
            let obs = LogLinearModel::margin(&counts, a, b);
            let fit = LogLinearModel::margin(&p, a, b);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (fit[i][j] * total - obs[i][j]).abs() < 1e-6,
                        "margin ({a},{b})[{i}][{j}]: {} vs {}",
                        fit[i][j] * total,
                        obs[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn coefficients_round_trip_through_probs() {
        let counts = seatbelt_counts();
        let p = LogLinearModel::fit_probs(&counts).unwrap();
        let theta = LogLinearModel::coefficients(&p).unwrap();
        let back = LogLinearModel::cell_probs(&theta).unwrap();
        for i in 0..CELLS {
            assert!((p[i] - back[i]).abs() < 1e-10, "cell {i}: {} vs {}", p[i], back[i]);
        }
    }

    #[test]
    fn sampler_counts_sum_to_n() {
        let counts = seatbelt_counts();
        let p = LogLinearModel::fit_probs(&counts).unwrap();
        let theta = LogLinearModel::coefficients(&p).unwrap();
        let mut s = SeedStream::derive(20240, &[20]);
        let block = s.uniform_block(5_000, 1).unwrap();
        let data = LogLinearModel.sample_from_seeds(&theta, &block).unwrap();
        assert_eq!(data.values().iter().sum::<f64>(), 5_000.0);
        assert!(data.values().iter().all(|&c| c >= 0.0 && c.fract() == 0.0));
    }

    #[test]
    fn estimate_recovers_truth_on_large_sample() {
        let counts = seatbelt_counts();
        let truth = LogLinearModel::fit_probs(&counts).unwrap();
        let theta = LogLinearModel::coefficients(&truth).unwrap();
        let mut s = SeedStream::derive(20240, &[21]);
        let block = s.uniform_block(200_000, 1).unwrap();
        let data = LogLinearModel.sample_from_seeds(&theta, &block).unwrap();
        let est = LogLinearModel.estimate(&data).unwrap();
        let fitted = LogLinearModel::cell_probs(&est).unwrap();
        let err: f64 = truth
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 0.01, "probability error {err}");
    }

    #[test]
    fn zero_margin_gets_corrected() {
        // empty injury=Yes column forces the 0.5 correction; the estimate
        // must stay finite
        let mut counts = vec![0.0; CELLS];
        for cell in 0..CELLS {
            if cell % 2 == 0 {
                counts[cell] = 5.0;
            }
        }
        let theta = LogLinearModel.estimate(&Dataset::single_row(counts).unwrap()).unwrap();
        assert!(theta.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(LogLinearModel::fit_probs(&vec![1.5; CELLS]).is_err());
        assert!(LogLinearModel::fit_probs(&vec![-1.0; CELLS]).is_err());
        assert!(LogLinearModel::fit_probs(&[1.0, 2.0]).is_err());
    }
}
