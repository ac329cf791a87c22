//! `fastavg` - JSON-configured experiments for the fast-transport averaging
//! laboratory.
//!
//! Exit codes: 0 = run completed and its acceptance checks passed,
//! 2 = run completed but a check failed, 1 = execution error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use fastavg_core::config::{ExperimentConfig, ExperimentKind};
use fastavg_core::experiments::run_and_emit;

#[derive(Parser)]
#[command(name = "fastavg", version, about = "fast-transport averaging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.csv / rate.csv / paths/*.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica fan-out (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigendecomposition report of the configured operator.
    Eigen(RunArgs),
    /// One coupled SPDE / averaged-SDE trajectory with path dumps.
    Simulate(RunArgs),
    /// Strong-convergence rate study over the eps ladder.
    Converge(RunArgs),
    /// Uniform-in-eps moment bounds for the boundary process and the field.
    Bound(RunArgs),
    /// Fluctuation-field comparison against the analytic limit covariance.
    Fluctuate(RunArgs),
    /// Hypothesis checklist for the configured model.
    Validate(RunArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Eigen(_) => ExperimentKind::Eigen,
            Command::Simulate(_) => ExperimentKind::Simulate,
            Command::Converge(_) => ExperimentKind::Converge,
            Command::Bound(_) => ExperimentKind::Bound,
            Command::Fluctuate(_) => ExperimentKind::Fluctuate,
            Command::Validate(_) => ExperimentKind::Validate,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Eigen(a)
            | Command::Simulate(a)
            | Command::Converge(a)
            | Command::Bound(a)
            | Command::Fluctuate(a)
            | Command::Validate(a) => a,
        }
    }
}

fn run() -> anyhow::Result<Option<bool>> {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let args = cli.command.args();

    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("rayon pool already initialized")?;
    }

    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text).context("parsing config")?;
    if cfg.experiment.kind != kind {
        anyhow::bail!(
            "config declares kind {:?} but the {:?} subcommand was invoked",
            cfg.experiment.kind,
            kind
        );
    }
    if let Some(seed) = args.seed {
        cfg.noise.seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output dir {}", args.out.display()))?;

    let passed = run_and_emit(&cfg, &args.out).context("running experiment")?;
    match passed {
        Some(true) => println!("{kind:?}: checks passed; reports in {}", args.out.display()),
        Some(false) => println!("{kind:?}: CHECKS FAILED; reports in {}", args.out.display()),
        None => println!("{kind:?}: done; reports in {}", args.out.display()),
    }
    Ok(passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(Some(false)) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
