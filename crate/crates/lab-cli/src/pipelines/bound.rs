//! Fitting and checking the tail-bound constants.

use super::{config_echo, theta_table, FAMILY_HOLDOUT};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{num, Report};
use serde_json::json;
use siplab_core::bounds::{
    fit_constants, standard_grid, validate_constants, BoundModel, FitResult, GridPoint,
};
use siplab_core::coefficients::{series_summary, sigma2_exact};
use siplab_core::processes::Process;
use siplab_core::rng::derive_seed;

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub sigma2: f64,
    pub series: serde_json::Value,
    /// Absent for `bound check`, which takes the constants from the config.
    pub fit: Option<FitResult>,
    pub c1: f64,
    pub c2: f64,
    pub holdout: Vec<GridPoint>,
    pub holdout_ok: bool,
}

fn model(cfg: &ExperimentConfig) -> CliResult<(Process, BoundModel)> {
    let process = cfg.process.build()?.normalize()?;
    let chain = process.as_chain();
    let sigma2 = match chain {
        Some(c) => sigma2_exact(c)?.value,
        None => {
            return Err(CliError::Config(
                "bound pipelines need a finite chain for the exact variance rate".into(),
            ))
        }
    };
    let table = theta_table(cfg, chain, process.sup_norm(), None)?;
    let summary = series_summary(&table).with_sigma2(sigma2);
    Ok((process, BoundModel::new(sigma2.max(0.0), summary)?))
}

fn holdout(
    cfg: &ExperimentConfig,
    process: &Process,
    model: &BoundModel,
    c1: f64,
    c2: f64,
) -> CliResult<(bool, Vec<GridPoint>)> {
    let b = &cfg.bound;
    let grid = standard_grid(&b.holdout_n, b.points_per_n, process.sup_norm());
    let seed = derive_seed(cfg.seed, FAMILY_HOLDOUT, 0);
    Ok(validate_constants(
        process,
        model,
        &grid,
        b.replicates,
        seed,
        c1,
        c2,
    )?)
}

fn check_grids(cfg: &ExperimentConfig) -> CliResult<()> {
    let b = &cfg.bound;
    if b.holdout_n.iter().any(|n| b.train_n.contains(n)) {
        return Err(CliError::Config(
            "training and holdout lengths must be disjoint".into(),
        ));
    }
    if b.points_per_n == 0 || b.holdout_n.is_empty() {
        return Err(CliError::Config("empty bound grid".into()));
    }
    Ok(())
}

/// Fits `(c₁, c₂)` on the training grid and validates them on the holdout.
pub fn run_bound_fit(cfg: &ExperimentConfig) -> CliResult<BoundReport> {
    check_grids(cfg)?;
    if cfg.bound.train_n.is_empty() {
        return Err(CliError::Config("empty training grid".into()));
    }
    let (process, model) = model(cfg)?;
    let b = &cfg.bound;
    let grid = standard_grid(&b.train_n, b.points_per_n, process.sup_norm());
    let fit = fit_constants(&process, &model, &grid, b.replicates, cfg.seed)?;
    let (ok, points) = holdout(cfg, &process, &model, fit.c1, fit.c2)?;
    Ok(BoundReport {
        sigma2: model.sigma2,
        series: model.summary.to_json(),
        c1: fit.c1,
        c2: fit.c2,
        fit: Some(fit),
        holdout: points,
        holdout_ok: ok,
    })
}

/// Checks configured constants on the holdout grid.
pub fn run_bound_check(cfg: &ExperimentConfig) -> CliResult<BoundReport> {
    check_grids(cfg)?;
    let (Some(c1), Some(c2)) = (cfg.bound.c1, cfg.bound.c2) else {
        return Err(CliError::Config(
            "bound check needs bound.c1 and bound.c2".into(),
        ));
    };
    let (process, model) = model(cfg)?;
    let (ok, points) = holdout(cfg, &process, &model, c1, c2)?;
    Ok(BoundReport {
        sigma2: model.sigma2,
        series: model.summary.to_json(),
        fit: None,
        c1,
        c2,
        holdout: points,
        holdout_ok: ok,
    })
}

fn grid_rows(points: &[GridPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            let e = &p.estimate;
            vec![
                e.n.to_string(),
                num(e.x),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
                num(p.rhs),
                p.binding.to_string(),
            ]
        })
        .collect()
}

const GRID_HEADER: [&str; 7] = ["n", "x", "p_hat", "ci_low", "ci_high", "rhs", "binding"];

impl BoundReport {
    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        if let Some(fit) = &self.fit {
            r.add_csv("train.csv", &GRID_HEADER, &grid_rows(&fit.points));
        }
        r.add_csv("holdout.csv", &GRID_HEADER, &grid_rows(&self.holdout));
        let binding: Vec<serde_json::Value> = self
            .fit
            .iter()
            .flat_map(|f| f.binding())
            .map(|p| json!({"n": p.estimate.n, "x": p.estimate.x, "ci_high": p.estimate.ci_high, "rhs": p.rhs}))
            .collect();
        r.add_json(
            "constants.json",
            &json!({
                "pipeline": if self.fit.is_some() { "bound fit" } else { "bound check" },
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.sigma2,
                "series": self.series,
                "c1": self.c1,
                "c2": self.c2,
                "c1_relevant": self.fit.as_ref().map(|f| f.c1_relevant),
                "binding_points": binding,
                "holdout_dominated": self.holdout_ok,
            }),
        );
        r
    }
}
