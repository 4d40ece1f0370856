//! Declarative experiment runner: each study produces a self-describing CSV
//! table whose metadata echoes the full configuration and master seed, so a
//! rerun with the same flags reproduces the file byte for byte.

use crate::dists::DistSpec;
use crate::dptest;
use crate::error::{Error, Result};
use crate::goftest::ks_test;
use crate::mcmcbench;
use crate::models::{loglinear::seatbelt_counts, BetaModel, BurrModel, Dataset, LogLinearModel, Model, NormalLocation};
use crate::privacy::dp_beta_estimate;
use crate::randcore::{SeedStream, DEFAULT_MASTER_SEED};
use crate::synth::{one_step, parametric_bootstrap};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    BurrKs,
    LogLinear,
    BetaDp,
    Dp2PropNull,
    Dp2PropPower,
    BenchMcmc,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BurrKs => "burr-ks",
            ExperimentKind::LogLinear => "loglinear",
            ExperimentKind::BetaDp => "beta-dp",
            ExperimentKind::Dp2PropNull => "dp2prop-null",
            ExperimentKind::Dp2PropPower => "dp2prop-power",
            ExperimentKind::BenchMcmc => "bench-mcmc",
        }
    }
}

/// Fully resolved study configuration. Construct with [`ExperimentConfig::new`]
/// to pick up the desk-scale defaults, then override fields as needed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    /// Monte Carlo replicates per p-value in the two-proportion studies.
    pub inner_reps: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub master_seed: u64,
    pub full: bool,
    /// Alternative proportions swept by the power study.
    pub theta_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, full: bool) -> Self {
        let (n_grid, reps, inner_reps): (Vec<usize>, usize, usize) = match (kind, full) {
            (ExperimentKind::BurrKs, false) => (vec![100, 1_000], 2_000, 0),
            (ExperimentKind::BurrKs, true) => (vec![100, 1_000, 10_000], 10_000, 0),
            (ExperimentKind::LogLinear, false) => (vec![100, 1_000, 10_000], 200, 0),
            (ExperimentKind::LogLinear, true) => (vec![100, 1_000, 10_000, 100_000], 200, 0),
            (ExperimentKind::BetaDp, false) => (vec![1_000, 10_000, 100_000], 100, 0),
            (ExperimentKind::BetaDp, true) => (vec![1_000, 10_000, 100_000, 1_000_000], 200, 0),
            (ExperimentKind::Dp2PropNull, false) => (vec![200], 2_000, 1_000),
            (ExperimentKind::Dp2PropNull, true) => (vec![200], 10_000, 2_000),
            (ExperimentKind::Dp2PropPower, false) => (vec![200], 2_000, 1_000),
            (ExperimentKind::Dp2PropPower, true) => (vec![200], 10_000, 2_000),
            (ExperimentKind::BenchMcmc, false) => (vec![64, 128, 256, 512, 1_024, 2_048, 4_096], 5, 0),
            (ExperimentKind::BenchMcmc, true) => {
                (vec![64, 128, 256, 512, 1_024, 2_048, 4_096, 8_192, 16_384], 5, 0)
            }
        };
        let theta_grid = if full {
            (0..=30).map(|i| 0.30 + 0.005 * i as f64).collect()
        } else {
            vec![0.30, 0.35, 0.40, 0.45, 0.50]
        };
        ExperimentConfig {
            kind,
            n_grid,
            reps,
            inner_reps,
            alpha: 0.05,
            epsilon: 1.0,
            master_seed: DEFAULT_MASTER_SEED,
            full,
            theta_grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid must be nonempty and strictly ascending"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Rectangular table plus the `#`-comment metadata block it is written with.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.headers.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &str) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::invalid(format!("cannot write {path}: {e}")))
    }
}

fn fmt(v: f64) -> String {
    // shortest round-trip representation; deterministic across runs
    format!("{v}")
}

fn base_metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("experiment".into(), cfg.kind.name().into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("master_seed".into(), cfg.master_seed.to_string()),
        (
            "n_grid".into(),
            cfg.n_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("reps".into(), cfg.reps.to_string()),
        ("alpha".into(), fmt(cfg.alpha)),
        ("epsilon".into(), fmt(cfg.epsilon)),
        ("full".into(), cfg.full.to_string()),
    ]
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::BurrKs => burr_ks_table(cfg),
        ExperimentKind::LogLinear => loglinear_table(cfg),
        ExperimentKind::BetaDp => beta_dp_table(cfg),
        ExperimentKind::Dp2PropNull => dp2prop_null_table(cfg),
        ExperimentKind::Dp2PropPower => dp2prop_power_table(cfg),
        ExperimentKind::BenchMcmc => bench_mcmc_table(cfg),
    }
}

// ---------------------------------------------------------------------------
// K-S power study: original, fitted-model, and one-step samples tested
// against the true generating distribution

pub struct KsPowerRow {
    pub n: usize,
    /// Rejection rates for the original sample, the fitted-model sample, and
    /// the one-step sample, in that order.
    pub power: [f64; 3],
}

pub fn burr_ks_powers(cfg: &ExperimentConfig) -> Result<Vec<KsPowerRow>> {
    let truth = [2.0, 4.0];
    let true_dist = DistSpec::burr_xii(truth[0], truth[1])?;
    let mut out = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let rejections: Vec<[bool; 3]> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<[bool; 3]> {
                let mut s = SeedStream::derive(cfg.master_seed, &[1, ni as u64, rep]);
                let block = s.uniform_block(n, 1)?;
                let x = BurrModel.sample_from_seeds(&truth, &block)?;
                let theta_x = BurrModel.estimate(&x)?;
                let mut zs = s.child(&[1]);
                let z = parametric_bootstrap(&BurrModel, &theta_x, n, &mut zs)?;
                let mut ys = s.child(&[2]);
                let y = one_step(&BurrModel, &theta_x, n, &mut ys)?;
                let cdf = |v: f64| true_dist.cdf(v);
                let rej = |sample: &Dataset| -> Result<bool> {
                    Ok(ks_test(sample.scalar_values()?, cdf, cfg.alpha)?.p_value <= cfg.alpha)
                };
                Ok([rej(&x)?, rej(&z)?, rej(&y.data)?])
            })
            .collect::<Result<_>>()?;
        let mut power = [0.0; 3];
        for flags in &rejections {
            for k in 0..3 {
                power[k] += flags[k] as u8 as f64;
            }
        }
        for p in &mut power {
            *p /= cfg.reps as f64;
        }
        out.push(KsPowerRow { n, power });
    }
    Ok(out)
}

fn burr_ks_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let rows = burr_ks_powers(cfg)?;
    let mut meta = base_metadata(cfg);
    meta.push(("shape_c".into(), "2".into()));
    meta.push(("shape_k".into(), "4".into()));
    let mut out = Vec::new();
    for row in &rows {
        for (k, series) in ["original", "fitted", "one-step"].iter().enumerate() {
            out.push(vec![
                row.n.to_string(),
                (*series).to_string(),
                fmt(row.power[k]),
                fmt(binomial_se(row.power[k], cfg.reps)),
                cfg.reps.to_string(),
            ]);
        }
    }
    Ok(ResultTable {
        metadata: meta,
        headers: vec!["n".into(), "series".into(), "power".into(), "std_error".into(), "reps".into()],
        rows: out,
    })
}

// ---------------------------------------------------------------------------
// Log-linear study: mean squared l2 error of the fitted cell probabilities

pub struct MseRow {
    pub n: usize,
    /// (mean squared error, standard error) per series.
    pub series: Vec<(&'static str, f64, f64)>,
}

pub fn loglinear_mse(cfg: &ExperimentConfig) -> Result<Vec<MseRow>> {
    let p0 = LogLinearModel::fit_probs(&seatbelt_counts())?;
    let theta0 = LogLinearModel::coefficients(&p0)?;
    let sq_err = |theta: &[f64]| -> Result<f64> {
        let p = LogLinearModel::cell_probs(theta)?;
        Ok(p.iter().zip(&p0).map(|(a, b)| (a - b).powi(2)).sum())
    };
    let mut out = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let errs: Vec<[f64; 3]> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<[f64; 3]> {
                let mut s = SeedStream::derive(cfg.master_seed, &[2, ni as u64, rep]);
                let block = s.uniform_block(n, 1)?;
                let x = LogLinearModel.sample_from_seeds(&theta0, &block)?;
                let theta_x = LogLinearModel.estimate(&x)?;
                let mut zs = s.child(&[1]);
                let z = parametric_bootstrap(&LogLinearModel, &theta_x, n, &mut zs)?;
                let theta_z = LogLinearModel.estimate(&z)?;
                let mut ys = s.child(&[2]);
                let y = one_step(&LogLinearModel, &theta_x, n, &mut ys)?;
                Ok([sq_err(&theta_x)?, sq_err(&theta_z)?, sq_err(&y.theta_hat_y)?])
            })
            .collect::<Result<_>>()?;
        let series = ["original", "fitted", "one-step"]
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let col: Vec<f64> = errs.iter().map(|e| e[k]).collect();
                let (m, se) = mean_se(&col);
                (*name, m, se)
            })
            .collect();
        out.push(MseRow { n, series });
    }
    Ok(out)
}

fn mse_table(cfg: &ExperimentConfig, rows: Vec<MseRow>, extra_meta: Vec<(String, String)>) -> ResultTable {
    let mut meta = base_metadata(cfg);
    meta.extend(extra_meta);
    let mut out = Vec::new();
    for row in &rows {
        for (name, mse, se) in &row.series {
            out.push(vec![
                row.n.to_string(),
                (*name).to_string(),
                fmt(*mse),
                fmt(*se),
                cfg.reps.to_string(),
            ]);
        }
    }
    ResultTable {
        metadata: meta,
        headers: vec![
            "n".into(),
            "series".into(),
            "mean_sq_error".into(),
            "std_error".into(),
            "reps".into(),
        ],
        rows: out,
    }
}

fn loglinear_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let rows = loglinear_mse(cfg)?;
    Ok(mse_table(cfg, rows, vec![("truth".into(), "seatbelt two-way fit".into())]))
}

// ---------------------------------------------------------------------------
// DP beta study: error curves for the MLE, the DP estimate, and estimates
// from fitted-model and one-step samples seeded at the DP estimate

pub fn beta_dp_mse(cfg: &ExperimentConfig) -> Result<Vec<MseRow>> {
    let truth = [5.0, 3.0];
    let sq_err =
        |theta: &[f64]| (theta[0] - truth[0]).powi(2) + (theta[1] - truth[1]).powi(2);
    let mut out = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let errs: Vec<[f64; 4]> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<[f64; 4]> {
                let mut s = SeedStream::derive(cfg.master_seed, &[3, ni as u64, rep]);
                let block = s.uniform_block(n, 1)?;
                let x = BetaModel.sample_from_seeds(&truth, &block)?;
                let theta_mle = BetaModel.estimate(&x)?;
                let mut ns = s.child(&[1]);
                let theta_dp = dp_beta_estimate(&x, cfg.epsilon, &mut ns)?;
                let mut zs = s.child(&[2]);
                let z = parametric_bootstrap(&BetaModel, &theta_dp, n, &mut zs)?;
                let theta_z = BetaModel.estimate(&z)?;
                let mut ys = s.child(&[3]);
                let y = one_step(&BetaModel, &theta_dp, n, &mut ys)?;
                Ok([
                    sq_err(&theta_mle),
                    sq_err(&theta_dp),
                    sq_err(&theta_z),
                    sq_err(&y.theta_hat_y),
                ])
            })
            .collect::<Result<_>>()?;
        let series = ["mle", "dp", "fitted", "one-step"]
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let col: Vec<f64> = errs.iter().map(|e| e[k]).collect();
                let (m, se) = mean_se(&col);
                (*name, m, se)
            })
            .collect();
        out.push(MseRow { n, series });
    }
    Ok(out)
}

fn beta_dp_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let rows = beta_dp_mse(cfg)?;
    Ok(mse_table(
        cfg,
        rows,
        vec![("truth_alpha".into(), "5".into()), ("truth_beta".into(), "3".into())],
    ))
}

// ---------------------------------------------------------------------------
// DP two-proportion test: p-value calibration under the null and power
// against one-sided alternatives

/// Paired null p-values (one-step, fitted-model) across `cfg.reps`
/// replicates at theta_x = theta_y = 0.3, n = m = n_grid[0].
pub fn dp2prop_null_pvalues(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = cfg.n_grid[0];
    let pairs: Vec<(f64, f64)> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64)> {
            let mut s = SeedStream::derive(cfg.master_seed, &[4, rep]);
            let prob = dptest::simulate_problem(0.3, 0.3, n, n, cfg.epsilon, &mut s)?;
            let one = dptest::dp2prop_onestep_pvalue(&prob, cfg.inner_reps, &s.child(&[1]))?;
            let boot = dptest::dp2prop_bootstrap_pvalue(&prob, cfg.inner_reps, &s.child(&[2]))?;
            Ok((one.p_value, boot.p_value))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

fn ecdf(values: &[f64], at: f64) -> f64 {
    values.iter().filter(|&&v| v <= at).count() as f64 / values.len() as f64
}

fn dp2prop_null_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (one, boot) = dp2prop_null_pvalues(cfg)?;
    let mut meta = base_metadata(cfg);
    meta.push(("theta_x".into(), "0.3".into()));
    meta.push(("theta_y".into(), "0.3".into()));
    meta.push(("inner_reps".into(), cfg.inner_reps.to_string()));
    let mut rows = Vec::new();
    for i in 0..=100 {
        let u = i as f64 / 100.0;
        rows.push(vec![fmt(u), fmt(ecdf(&one, u)), fmt(ecdf(&boot, u))]);
    }
    Ok(ResultTable {
        metadata: meta,
        headers: vec!["p_value".into(), "ecdf_one_step".into(), "ecdf_fitted".into()],
        rows,
    })
}

/// Rejection rates (one-step, fitted-model) at a single alternative theta_y.
pub fn dp2prop_power_at(cfg: &ExperimentConfig, theta_y: f64) -> Result<(f64, f64)> {
    let n = cfg.n_grid[0];
    let flags: Vec<(bool, bool)> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(bool, bool)> {
            // the replicate path mixes in theta_y so every grid point gets an
            // independent stream
            let tag = (theta_y * 1e6).round() as u64;
            let mut s = SeedStream::derive(cfg.master_seed, &[5, tag, rep]);
            let prob = dptest::simulate_problem(0.3, theta_y, n, n, cfg.epsilon, &mut s)?;
            let one = dptest::dp2prop_onestep_pvalue(&prob, cfg.inner_reps, &s.child(&[1]))?;
            let boot = dptest::dp2prop_bootstrap_pvalue(&prob, cfg.inner_reps, &s.child(&[2]))?;
            Ok((one.p_value <= cfg.alpha, boot.p_value <= cfg.alpha))
        })
        .collect::<Result<_>>()?;
    let p1 = flags.iter().filter(|f| f.0).count() as f64 / cfg.reps as f64;
    let p2 = flags.iter().filter(|f| f.1).count() as f64 / cfg.reps as f64;
    Ok((p1, p2))
}

fn dp2prop_power_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut meta = base_metadata(cfg);
    meta.push(("theta_x".into(), "0.3".into()));
    meta.push(("inner_reps".into(), cfg.inner_reps.to_string()));
    meta.push((
        "theta_grid".into(),
        cfg.theta_grid.iter().map(|t| fmt(*t)).collect::<Vec<_>>().join(","),
    ));
    let mut rows = Vec::new();
    for &theta_y in &cfg.theta_grid {
        let (p1, p2) = dp2prop_power_at(cfg, theta_y)?;
        rows.push(vec![
            fmt(theta_y),
            fmt(p1),
            fmt(binomial_se(p1, cfg.reps)),
            fmt(p2),
            fmt(binomial_se(p2, cfg.reps)),
        ]);
    }
    Ok(ResultTable {
        metadata: meta,
        headers: vec![
            "theta_y".into(),
            "power_one_step".into(),
            "se_one_step".into(),
            "power_fitted".into(),
            "se_fitted".into(),
        ],
        rows,
    })
}

// ---------------------------------------------------------------------------
// Runtime benchmark

fn bench_mcmc_table(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let stream = SeedStream::derive(cfg.master_seed, &[6]);
    // reps doubles as sweeps-per-timing-unit here
    let (rows, summary) = mcmcbench::run_benchmark(&cfg.n_grid, cfg.reps.min(20), 20, 0.1, &stream)?;
    let mut meta = base_metadata(cfg);
    meta.push(("step_sd".into(), "0.1".into()));
    meta.push(("mcmc_loglog_slope".into(), fmt(summary.mcmc_slope)));
    meta.push(("onestep_loglog_slope".into(), fmt(summary.onestep_slope)));
    Ok(ResultTable {
        metadata: meta,
        headers: vec!["n".into(), "mcmc_round_seconds".into(), "onestep_seconds".into()],
        rows: rows
            .iter()
            .map(|r| vec![r.n.to_string(), fmt(r.seconds_per_mcmc_round), fmt(r.seconds_per_onestep)])
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// End-user synthetic data command

pub struct SynthOutput {
    pub table: ResultTable,
    pub audit: String,
    pub theta_used: Vec<f64>,
}

/// Parses a single-column numeric CSV, skipping `#` comments and at most one
/// non-numeric header line.
pub fn parse_column_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if !header_seen && values.is_empty() => header_seen = true,
            Err(_) => {
                return Err(Error::invalid(format!(
                    "line {}: cannot parse {line:?} as a number",
                    lineno + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(Error::invalid("input contains no numeric rows"));
    }
    Ok(values)
}

pub fn run_synth(
    values: &[f64],
    model_name: &str,
    epsilon: Option<f64>,
    master_seed: u64,
) -> Result<SynthOutput> {
    let model: &dyn Model = match model_name {
        "beta" => &BetaModel,
        "normal" => &NormalLocation,
        "burr" => &BurrModel,
        other => return Err(Error::invalid(format!("unknown model {other:?}"))),
    };
    let data = Dataset::column(values.to_vec())?;
    let stream = SeedStream::derive(master_seed, &[7]);
    let (theta, audit) = match epsilon {
        Some(eps) => {
            if model_name != "beta" {
                return Err(Error::invalid("--epsilon is only supported for the beta model"));
            }
            let mut ns = stream.child(&[1]);
            let theta = dp_beta_estimate(&data, eps, &mut ns)?;
            (theta, format!("fully synthetic; {eps}-DP estimate used"))
        }
        None => (
            model.estimate(&data)?,
            "partially synthetic; theta_hat_x released exactly".to_string(),
        ),
    };
    let mut os = stream.child(&[2]);
    let result = one_step(model, &theta, values.len(), &mut os)?;
    let metadata = vec![
        ("experiment".into(), "synth".into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("master_seed".into(), master_seed.to_string()),
        ("model".into(), model_name.to_string()),
        (
            "epsilon".into(),
            epsilon.map(fmt).unwrap_or_else(|| "none".into()),
        ),
        ("n".into(), values.len().to_string()),
        ("audit".into(), audit.clone()),
    ];
    let rows = result
        .data
        .scalar_values()?
        .iter()
        .map(|&v| vec![fmt(v)])
        .collect();
    Ok(SynthOutput {
        table: ResultTable { metadata, headers: vec!["value".into()], rows },
        audit,
        theta_used: theta,
    })
}
