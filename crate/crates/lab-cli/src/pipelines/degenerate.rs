//! Checks for processes with zero variance rate.

use super::{config_echo, require_chain, theta_table, FAMILY_SERIES};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::report::{num, Report};
use serde_json::json;
use siplab_core::bounds::{
    degenerate_moment_check, series_convergence_check, DegenerateMomentReport, SeriesCheck,
    TailStatistic,
};
use siplab_core::processes::ProcessSpec;
use siplab_core::rng::derive_seed;

#[derive(Debug, Clone)]
pub struct DegenerateSuite {
    pub moments: DegenerateMomentReport,
    pub series: SeriesCheck,
    /// `max g − min g` for a coboundary, which bounds `|S_n|` pathwise.
    pub pathwise_bound: Option<f64>,
    pub flat: bool,
    /// Every summand with level above the pathwise bound is exactly 0.
    pub zero_beyond_bound: Option<bool>,
    pub pass: bool,
}

fn pathwise_bound(spec: &ProcessSpec) -> Option<f64> {
    match spec {
        ProcessSpec::Coboundary { g, .. } if !g.is_empty() => {
            let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
            Some(hi - lo)
        }
        _ => None,
    }
}

pub fn run_degenerate_suite(cfg: &ExperimentConfig) -> CliResult<DegenerateSuite> {
    cfg.require_n_list()?;
    let process = cfg.process.build()?;
    let chain = require_chain(&process)?;
    let d = &cfg.degenerate;
    let theta = theta_table(cfg, Some(chain), process.sup_norm(), Some((1, 1)))?;
    let moments = degenerate_moment_check(
        &process,
        &theta,
        d.q,
        d.r,
        d.p,
        &cfg.n_list,
        cfg.replicates,
        cfg.seed,
    )?;
    let series = series_convergence_check(
        &process,
        d.alpha,
        d.p,
        d.epsilon,
        &cfg.n_list,
        d.series_replicates,
        derive_seed(cfg.seed, FAMILY_SERIES, 0),
        TailStatistic::Absolute,
        true,
    )?;
    let bound = pathwise_bound(&cfg.process);
    let zero_beyond_bound = bound.map(|b| {
        series
            .rows
            .iter()
            .filter(|r| r.level > b)
            .all(|r| r.estimate.hits == 0 && r.summand == 0.0)
    });
    let flat = moments.growth.slope.abs() <= d.flat_tolerance;
    let pass = flat && moments.below_bound && zero_beyond_bound.unwrap_or(series.decays);
    Ok(DegenerateSuite {
        moments,
        series,
        pathwise_bound: bound,
        flat,
        zero_beyond_bound,
        pass,
    })
}

impl DegenerateSuite {
    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        let rows: Vec<Vec<String>> = self
            .moments
            .rows
            .iter()
            .map(|m| {
                vec![
                    m.n.to_string(),
                    num(m.moment),
                    num(m.moment_se),
                    num(m.bound),
                    num(m.max_norm),
                    num(m.reference),
                ]
            })
            .collect();
        let header = ["n", "moment", "moment_se", "bound", "max_norm", "reference"];
        r.add_csv("moments.csv", &header, &rows);
        r.add_dat("moments.dat", &header, &rows);
        let rows: Vec<Vec<String>> = self
            .series
            .rows
            .iter()
            .map(|s| {
                vec![
                    s.estimate.n.to_string(),
                    num(s.level),
                    num(s.estimate.p_hat),
                    num(s.estimate.ci_high),
                    num(s.weight),
                    num(s.summand),
                    num(s.summand_ci_high),
                ]
            })
            .collect();
        r.add_csv(
            "series.csv",
            &[
                "n",
                "level",
                "p_hat",
                "ci_high",
                "weight",
                "summand",
                "summand_ci_high",
            ],
            &rows,
        );
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "degenerate",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.moments.sigma2,
                "growth": self.moments.growth,
                "below_bound": self.moments.below_bound,
                "flat": self.flat,
                "pathwise_bound": self.pathwise_bound,
                "zero_beyond_bound": self.zero_beyond_bound,
                "series_decays": self.series.decays,
                "pass": self.pass,
            }),
        );
        r
    }
}
