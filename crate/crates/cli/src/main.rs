use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use ou_drift_bench::{commands, Overrides, RunConfig};
use ou_drift_core::{Estimator, IndexConvention};

/// Monte Carlo benchmark for drift estimators of a discretely observed
/// Ornstein-Uhlenbeck process.
#[derive(Debug, Parser)]
#[command(name = "ou-drift-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Replications per cell.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Built-in schedule, replacing the configured one.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long = "index-convention", global = true, value_enum)]
    index_convention: Option<ConventionArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write simulated paths to paths.csv.
    Simulate,
    /// Evaluate the estimators on simulated paths (estimates.csv).
    Estimate,
    /// Exact moments and cumulants per schedule cell (oracles.csv).
    Oracle,
    /// Oracle parity, cumulant screens and coupling check; exit 1 on a gated failure.
    Verify,
    /// Run the schedule and fit W1 against the rate bounds.
    Rates,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Amce,
    Amle,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Body,
    Abstract,
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("OU_BENCH_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("OU_BENCH_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        seed: cli.seed,
        replications: cli.reps,
        output_dir: cli.out.clone(),
        preset: cli.preset.clone(),
        estimators: cli.estimator.map(|e| match e {
            EstimatorArg::Amce => vec![Estimator::Amce],
            EstimatorArg::Amle => vec![Estimator::Amle],
            EstimatorArg::Both => vec![Estimator::Amce, Estimator::Amle],
        }),
        index_convention: cli.index_convention.map(|c| match c {
            ConventionArg::Body => IndexConvention::Body,
            ConventionArg::Abstract => IndexConvention::Abstract,
        }),
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    init_threads()?;
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides(cli))?;
    match cli.command {
        Command::Simulate => print_files(&commands::simulate(&cfg)?),
        Command::Estimate => print_files(&commands::estimate_paths(&cfg)?),
        Command::Oracle => print_files(&commands::oracle(&cfg)?),
        Command::Rates => {
            let outcome = commands::rates(&cfg)?;
            for run in &outcome.runs {
                println!(
                    "{}: slope {:.4} (r2 {:.4}) against {}",
                    run.estimator.as_str(),
                    run.bound_fit.fit.slope,
                    run.bound_fit.fit.r2,
                    run.bound_fit.predictor
                );
            }
            print_files(&outcome.files);
        }
        Command::Verify => {
            let outcome = commands::verify(&cfg)?;
            print_files(&outcome.files);
            let failing: Vec<_> = outcome.failing().collect();
            if !failing.is_empty() {
                for c in failing {
                    eprintln!(
                        "FAIL {} [{}]: exact {:e}, empirical {:e}, se {:e}",
                        c.check, c.scope, c.exact, c.empirical, c.standard_error
                    );
                }
                return Ok(ExitCode::from(1));
            }
            println!("all {} gated checks pass", outcome.checks.iter().filter(|c| c.gated).count());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
