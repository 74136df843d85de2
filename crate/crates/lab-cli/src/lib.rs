//! Experiment orchestration on top of `siplab-core`: TOML configs, rate and
//! bound pipelines, and deterministic CSV/JSON/.dat reports.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod pipelines;
pub mod regression;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use report::{emit_report, Report};

/// Subcommands of the `siplab` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    BoundFit,
    BoundCheck,
    CoupleRun,
    Rates,
    Wasserstein,
    Degenerate,
}

/// Runs one pipeline and renders its report. `rates` dispatches to the LSV
/// experiment when the configured process is an LSV map.
pub fn run_command(command: Command, cfg: &ExperimentConfig) -> CliResult<Report> {
    use pipelines::*;
    Ok(match command {
        Command::Coeffs => run_coeffs(cfg)?.report(cfg),
        Command::BoundFit => run_bound_fit(cfg)?.report(cfg),
        Command::BoundCheck => run_bound_check(cfg)?.report(cfg),
        Command::CoupleRun => run_couple(cfg)?.report(cfg),
        Command::Rates => match cfg.process {
            siplab_core::processes::ProcessSpec::Lsv { .. } => run_lsv_experiment(cfg)?.report(cfg),
            _ => run_rate_experiment(cfg)?.report(cfg),
        },
        Command::Wasserstein => donsker_wasserstein(cfg)?.report(cfg),
        Command::Degenerate => run_degenerate_suite(cfg)?.report(cfg),
    })
}

/// Runs `command` on a dedicated pool of `threads` workers.
pub fn run_with_threads(
    command: Command,
    cfg: &ExperimentConfig,
    threads: usize,
) -> CliResult<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_command(command, cfg))
}
