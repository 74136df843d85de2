use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use siplab_cli::{emit_report, run_with_threads, Command, ExperimentConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "siplab",
    version,
    about = "Dependent-process deviation and coupling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Exact dependence coefficients, variance rate and series sums.
    Coeffs(Common),
    /// Tail-bound constants.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Dyadic-block Gaussian coupling.
    #[command(subcommand)]
    Couple(CoupleCmd),
    /// Coupling-error rate experiment (LSV configs use the surrogate).
    Rates(Common),
    /// Donsker-line distance to Brownian motion.
    Wasserstein(Common),
    /// Zero-variance (coboundary) suite.
    Degenerate(Common),
}

#[derive(Subcommand)]
enum BoundCmd {
    /// Fit constants on the training grid and validate on the holdout.
    Fit(Common),
    /// Check configured constants on the holdout grid.
    Check(Common),
}

#[derive(Subcommand)]
enum CoupleCmd {
    /// One coupled path at the largest configured length.
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Top::Coeffs(c) => (Command::Coeffs, c),
        Top::Bound(BoundCmd::Fit(c)) => (Command::BoundFit, c),
        Top::Bound(BoundCmd::Check(c)) => (Command::BoundCheck, c),
        Top::Couple(CoupleCmd::Run(c)) => (Command::CoupleRun, c),
        Top::Rates(c) => (Command::Rates, c),
        Top::Wasserstein(c) => (Command::Wasserstein, c),
        Top::Degenerate(c) => (Command::Degenerate, c),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .or_else(|| cfg.out.clone())
        .context("no output directory: pass --out or set `out` in the config")?;
    let report = run_with_threads(command, &cfg, common.threads)?;
    for path in emit_report(&report, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}
