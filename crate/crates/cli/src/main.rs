//! Experiment harness CLI: runs the simulation studies and the synthetic
//! data generator, emitting self-describing CSV tables.

use clap::{Args, Parser, Subcommand};
use onestep::error::Error;
use onestep::experiment::{
    parse_column_csv, run_experiment, run_synth, ExperimentConfig, ExperimentKind, ResultTable,
};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "onestep", version, about = "Synthetic data experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed for all random streams.
    #[arg(long, default_value_t = 20240)]
    seed: u64,
    /// Replicates (per grid cell where applicable).
    #[arg(long)]
    reps: Option<usize>,
    /// Test level for power/calibration studies.
    #[arg(long)]
    alpha: Option<f64>,
    /// Privacy-loss budget.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated ascending sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// Output CSV path; prints to stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Full-scale study sizes instead of desk-scale defaults.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Distinguishability power table for the Burr(2,4) study.
    BurrKs(CommonArgs),
    /// Contingency-table probability error curves.
    Loglinear(CommonArgs),
    /// DP beta estimator error curves.
    BetaDp(CommonArgs),
    /// Null-hypothesis p-value calibration for the DP two-proportion test.
    Dp2propNull {
        #[command(flatten)]
        common: CommonArgs,
        /// Monte Carlo replicates per p-value.
        #[arg(long)]
        inner_reps: Option<usize>,
    },
    /// Power curve for the DP two-proportion test.
    Dp2propPower {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        inner_reps: Option<usize>,
        /// Comma-separated alternative proportions.
        #[arg(long, value_delimiter = ',')]
        theta_grid: Option<Vec<f64>>,
    },
    /// Runtime scaling of a Metropolis round versus one one-step call.
    BenchMcmc(CommonArgs),
    /// Generate a synthetic copy of a single-column numeric CSV.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Input CSV of observations.
        #[arg(long)]
        input: String,
        /// Model family: beta, normal, or burr.
        #[arg(long, default_value = "beta")]
        model: String,
    },
}

fn build_config(kind: ExperimentKind, common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::new(kind, common.full);
    cfg.master_seed = common.seed;
    if let Some(reps) = common.reps {
        cfg.reps = reps;
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = alpha;
    }
    if let Some(eps) = common.epsilon {
        cfg.epsilon = eps;
    }
    if let Some(grid) = &common.n_grid {
        cfg.n_grid = grid.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &ResultTable, out: &Option<String>) -> Result<(), Error> {
    match out {
        Some(path) => {
            table.write_csv(path)?;
            eprintln!("wrote {} rows to {path}", table.rows.len());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::BurrKs(c) | Command::Loglinear(c) | Command::BetaDp(c) | Command::BenchMcmc(c) => c,
        Command::Dp2propNull { common, .. }
        | Command::Dp2propPower { common, .. }
        | Command::Synth { common, .. } => common,
    };
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot configure thread pool: {e}")))?;
    }
    match &cli.command {
        Command::BurrKs(c) => {
            let cfg = build_config(ExperimentKind::BurrKs, c)?;
            emit(&run_experiment(&cfg)?, &c.out)
        }
        Command::Loglinear(c) => {
            let cfg = build_config(ExperimentKind::LogLinear, c)?;
            emit(&run_experiment(&cfg)?, &c.out)
        }
        Command::BetaDp(c) => {
            let cfg = build_config(ExperimentKind::BetaDp, c)?;
            emit(&run_experiment(&cfg)?, &c.out)
        }
        Command::Dp2propNull { common, inner_reps } => {
            let mut cfg = build_config(ExperimentKind::Dp2PropNull, common)?;
            if let Some(inner) = inner_reps {
                cfg.inner_reps = *inner;
            }
            emit(&run_experiment(&cfg)?, &common.out)
        }
        Command::Dp2propPower { common, inner_reps, theta_grid } => {
            let mut cfg = build_config(ExperimentKind::Dp2PropPower, common)?;
            if let Some(inner) = inner_reps {
                cfg.inner_reps = *inner;
            }
            if let Some(grid) = theta_grid {
                cfg.theta_grid = grid.clone();
            }
            emit(&run_experiment(&cfg)?, &common.out)
        }
        Command::BenchMcmc(c) => {
            let cfg = build_config(ExperimentKind::BenchMcmc, c)?;
            emit(&run_experiment(&cfg)?, &c.out)
        }
        Command::Synth { common, input, model } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| Error::invalid(format!("cannot read {input}: {e}")))?;
            let values = parse_column_csv(&text)?;
            let out = run_synth(&values, model, common.epsilon, common.seed)?;
            eprintln!("{}", out.audit);
            emit(&out.table, &common.out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_flags() {
        let cli = Cli::try_parse_from([
            "onestep", "burr-ks", "--seed", "7", "--reps", "100", "--n-grid", "100,1000",
            "--alpha", "0.1", "--full",
        ])
        .unwrap();
        match cli.command {
            Command::BurrKs(c) => {
                assert_eq!(c.seed, 7);
                assert_eq!(c.reps, Some(100));
                assert_eq!(c.n_grid, Some(vec![100, 1000]));
                assert_eq!(c.alpha, Some(0.1));
                assert!(c.full);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert!(Cli::try_parse_from(["onestep", "frobnicate"]).is_err());
        assert!(Cli::try_parse_from(["onestep", "synth"]).is_err()); // --input required
    }

    #[test]
    fn descending_grid_rejected_by_validation() {
        let cli = Cli::try_parse_from(["onestep", "burr-ks", "--n-grid", "1000,100"]).unwrap();
        match cli.command {
            Command::BurrKs(c) => {
                assert!(build_config(ExperimentKind::BurrKs, &c).is_err());
            }
            _ => unreachable!(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // estimation / numeric-domain breakdowns
                Error::Estimation { .. } | Error::Domain(_) => ExitCode::from(3),
                // bad flags, unreadable input, unknown models
                _ => ExitCode::from(2),
            }
        }
    }
}
