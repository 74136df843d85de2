//! Config-driven experiment pipelines. Each returns a typed result whose
//! `report` method renders byte-deterministic CSV/JSON/.dat files.

mod bound;
mod degenerate;
mod rates;

pub use bound::{run_bound_check, run_bound_fit, BoundReport};
pub use degenerate::{run_degenerate_suite, DegenerateSuite};
pub use rates::{
    donsker_sup, donsker_wasserstein, run_lsv_experiment, run_rate_experiment, DonskerReport,
    DonskerRow, LsvReport, OrbitRow, RateReport, RateRow,
};

use crate::config::{CoefficientSource, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::report::{num, Report};
use serde_json::json;
use siplab_core::coefficients::{
    alpha_dep4_exact, alpha_inf4_exact, series_summary, sigma2_exact, CoefficientKind, ThetaTable,
};
use siplab_core::coupling::{coupling_errors, make_schedule, Coupler, CouplingSchedule};
use siplab_core::processes::{FiniteChain, Process};

pub(crate) const FAMILY_RATE: u64 = 0x7261_7465;
pub(crate) const FAMILY_DONSKER: u64 = 0x646f_6e73;
pub(crate) const FAMILY_HOLDOUT: u64 = 0x686f_6c64;
pub(crate) const FAMILY_ORBIT: u64 = 0x6f72_6269;
pub(crate) const FAMILY_SERIES: u64 = 0x7365_7269;

pub(crate) fn require_chain(process: &Process) -> CliResult<&FiniteChain> {
    process.as_chain().ok_or_else(|| {
        CliError::Core(siplab_core::Error::Unsupported(
            "this pipeline needs an exact lattice chain".into(),
        ))
    })
}

/// θ table per the configured source; `pq` overrides the configured order.
pub(crate) fn theta_table(
    cfg: &ExperimentConfig,
    chain: Option<&FiniteChain>,
    sup_norm: f64,
    pq: Option<(usize, usize)>,
) -> CliResult<ThetaTable> {
    match &cfg.coefficients {
        CoefficientSource::Exact {
            p,
            q,
            horizon,
            tuple_horizon,
            tail,
        } => {
            let chain = chain.ok_or_else(|| {
                CliError::Config("exact coefficients need a finite chain; declare them".into())
            })?;
            let (p, q) = pq.unwrap_or((*p, *q));
            Ok(ThetaTable::from_chain(
                chain,
                p,
                q,
                *horizon,
                *tuple_horizon,
                *tail,
            )?)
        }
        CoefficientSource::Declared { p, q, values, tail } => {
            let (p, q) = pq.unwrap_or((*p, *q));
            Ok(ThetaTable::new(
                values.clone(),
                *tail,
                CoefficientKind::Theta { p, q },
                sup_norm,
            )?)
        }
    }
}

/// Variance rates at or below this count as zero, matching the threshold
/// of the degenerate checks.
const DEGENERATE_SIGMA2: f64 = 1e-6;

/// Exact variance rate, refusing the degenerate case.
pub(crate) fn positive_sigma2(chain: &FiniteChain) -> CliResult<f64> {
    let s = sigma2_exact(chain)?.value;
    if s <= DEGENERATE_SIGMA2 {
        return Err(CliError::Core(siplab_core::Error::Degenerate(format!(
            "sigma2 = {s}: coupling undefined, run the degenerate pipeline instead"
        ))));
    }
    Ok(s)
}

/// Schedule covering paths of length `n = 2^{N+1}`.
pub(crate) fn schedule_for(cfg: &ExperimentConfig, p: f64, n: u64) -> CliResult<CouplingSchedule> {
    if !n.is_power_of_two() || n < 8 {
        return Err(CliError::Config(format!(
            "n = {n} is not a power of two of at least 8"
        )));
    }
    let top = n.trailing_zeros() - 1;
    Ok(make_schedule(
        top,
        p,
        cfg.schedule.variant,
        cfg.schedule.c_fit,
    )?)
}

pub(crate) fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    cfg.to_json()
}

/// Coefficient tables, variance rate and series sums.
#[derive(Debug, Clone)]
pub struct CoeffReport {
    pub table: ThetaTable,
    pub sigma2: Option<f64>,
    pub alpha_inf4: Vec<f64>,
    pub alpha_dep4: Vec<f64>,
    pub summary: serde_json::Value,
}

pub fn run_coeffs(cfg: &ExperimentConfig) -> CliResult<CoeffReport> {
    let process = cfg.process.build()?;
    let chain = process.as_chain();
    let table = theta_table(cfg, chain, process.sup_norm(), None)?;
    let sigma2 = chain.map(sigma2_exact).transpose()?.map(|s| s.value);
    let (alpha_inf4, alpha_dep4) = match chain {
        Some(c) => {
            let h = siplab_core::coefficients::DEFAULT_TUPLE_HORIZON;
            let ai = (0..=cfg.alpha_horizon)
                .map(|k| alpha_inf4_exact(c, k, h))
                .collect::<siplab_core::Result<Vec<_>>>()?;
            let ad = (0..=cfg.alpha_horizon)
                .map(|k| alpha_dep4_exact(c, k, h))
                .collect::<siplab_core::Result<Vec<_>>>()?;
            (ai, ad)
        }
        None => (Vec::new(), Vec::new()),
    };
    let mut summary = series_summary(&table);
    if let Some(s) = sigma2 {
        summary = summary.with_sigma2(s);
    }
    Ok(CoeffReport {
        summary: summary.to_json(),
        table,
        sigma2,
        alpha_inf4,
        alpha_dep4,
    })
}

impl CoeffReport {
    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        let mut buf = Vec::new();
        self.table.write_csv(&mut buf).expect("in-memory write");
        r.add_bytes("theta.csv", buf);
        if !self.alpha_inf4.is_empty() {
            let rows: Vec<Vec<String>> = self
                .alpha_inf4
                .iter()
                .zip(&self.alpha_dep4)
                .enumerate()
                .map(|(k, (a, b))| vec![k.to_string(), num(*a), num(*b)])
                .collect();
            r.add_csv("alpha.csv", &["k", "alpha_inf4", "alpha_dep4"], &rows);
        }
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "coeffs",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.sigma2,
                "series": self.summary,
                "theta": self.table.values(),
            }),
        );
        r
    }
}

/// One coupled path at the largest configured length.
#[derive(Debug, Clone)]
pub struct CoupleReport {
    pub sigma2: f64,
    pub schedule: CouplingSchedule,
    pub path: siplab_core::coupling::CoupledPath,
    pub sup_error: f64,
}

pub fn run_couple(cfg: &ExperimentConfig) -> CliResult<CoupleReport> {
    cfg.require_n_list()?;
    let process = cfg.process.build()?;
    let chain = require_chain(&process)?;
    let sigma2 = positive_sigma2(chain)?;
    let n = *cfg.n_list.last().expect("non-empty");
    let schedule = schedule_for(cfg, cfg.schedule.p, n)?;
    let coupler = Coupler::new(chain, schedule.clone(), sigma2)?;
    let path = if cfg.identity_coupling {
        coupler.run_identity(cfg.seed)?
    } else {
        coupler.run(cfg.seed)?
    };
    let (sup_error, _) = coupling_errors(&path)?;
    Ok(CoupleReport {
        sigma2,
        schedule,
        path,
        sup_error,
    })
}

impl CoupleReport {
    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        let mut buf = Vec::new();
        self.path.write_csv(&mut buf).expect("in-memory write");
        r.add_bytes("path.csv", buf);
        r.add_json("levels.json", &self.path.levels_json());
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "couple run",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.sigma2,
                "n": self.path.len(),
                "c_fit": self.schedule.c_fit,
                "schedule": self.schedule,
                "sup_error": self.sup_error,
                "x1_minus_z1": self.path.x[0] - self.path.z[0],
            }),
        );
        r
    }
}
