//! Coupling-rate, Donsker-line and LSV experiments.

use super::{
    config_echo, positive_sigma2, require_chain, schedule_for, FAMILY_DONSKER, FAMILY_ORBIT,
    FAMILY_RATE,
};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::regression::{fit_rate, rms_summary, RateEstimate, RmsSummary};
use crate::report::{num, Report};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use siplab_core::coupling::{coupling_errors, CoupledPath, Coupler};
use siplab_core::processes::{
    intermittent_surrogate, path_extremes, FiniteChain, Process, ProcessSpec,
};
use siplab_core::rng::derive_seed;
use siplab_core::stats::{fit_line, LineFit};
use siplab_core::Error;

const RATE_TOLERANCE: f64 = 0.08;
const DONSKER_TOLERANCE: f64 = 0.10;
const LSV_TOLERANCE: f64 = 0.10;

/// Per-replicate statistic of coupled paths of length `n`, in replicate order.
#[allow(clippy::too_many_arguments)]
fn coupled_statistic<F>(
    cfg: &ExperimentConfig,
    chain: &FiniteChain,
    sigma2: f64,
    p: f64,
    n: u64,
    seed: u64,
    family: u64,
    stat: F,
) -> CliResult<Vec<f64>>
where
    F: Fn(&CoupledPath) -> siplab_core::Result<f64> + Sync,
{
    let schedule = schedule_for(cfg, p, n)?;
    let coupler = Coupler::new(chain, schedule, sigma2)?;
    let base = derive_seed(seed, family, n);
    let out: siplab_core::Result<Vec<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(base, 0, r);
            let path = if cfg.identity_coupling {
                coupler.run_identity(s)?
            } else {
                coupler.run(s)?
            };
            stat(&path)
        })
        .collect();
    Ok(out?)
}

fn sup_error_stat(path: &CoupledPath) -> siplab_core::Result<f64> {
    coupling_errors(path).map(|(s, _)| s)
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub n: u64,
    pub rms: f64,
    pub log_rms_var: f64,
    pub median: f64,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// L² norm of the coupling error across replicates, per `n`, with its fit.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub sigma2: f64,
    pub p: f64,
    pub c_fit: f64,
    pub rows: Vec<RateRow>,
    pub estimate: RateEstimate,
}

fn coupled_rate(
    cfg: &ExperimentConfig,
    chain: &FiniteChain,
    p: f64,
    target: f64,
    tolerance: f64,
) -> CliResult<RateReport> {
    cfg.validate_rate()?;
    let sigma2 = positive_sigma2(chain)?;
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    let mut sums = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let errs = coupled_statistic(
            cfg,
            chain,
            sigma2,
            p,
            n,
            cfg.seed,
            FAMILY_RATE,
            sup_error_stat,
        )?;
        let s = rms_summary(&errs);
        rows.push(RateRow {
            n,
            rms: s.rms,
            log_rms_var: s.log_rms_var,
            median: median(&errs),
        });
        sums.push(s);
    }
    let estimate = fit_rate(&cfg.n_list, &sums, target, tolerance, cfg.log_correction)?;
    Ok(RateReport {
        sigma2,
        p,
        c_fit: cfg.schedule.c_fit,
        rows,
        estimate,
    })
}

/// `‖sup_{k≤n}|S_k − T_k|‖₂` against `n`, target exponent `1/p`.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> CliResult<RateReport> {
    let process = cfg.process.build()?;
    let chain = require_chain(&process)?;
    let p = cfg.schedule.p;
    coupled_rate(
        cfg,
        chain,
        p,
        1.0 / p,
        cfg.tolerance.unwrap_or(RATE_TOLERANCE),
    )
}

impl RateReport {
    fn tables(&self, r: &mut Report, stem: &str) {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|x| {
                vec![
                    x.n.to_string(),
                    num(x.rms),
                    num(x.log_rms_var),
                    num(x.median),
                ]
            })
            .collect();
        r.add_csv(
            &format!("{stem}.csv"),
            &["n", "rms_sup_error", "log_rms_var", "median_sup_error"],
            &rows,
        );
        let first = &self.rows[0];
        let dat: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|x| {
                let fit = first.rms * (x.n as f64 / first.n as f64).powf(self.estimate.exponent);
                let target = first.rms * (x.n as f64 / first.n as f64).powf(self.estimate.target);
                vec![x.n.to_string(), num(x.rms), num(fit), num(target)]
            })
            .collect();
        r.add_dat(
            &format!("{stem}.dat"),
            &["n", "rms", "fitted", "target"],
            &dat,
        );
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        self.tables(&mut r, "rates");
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "rates",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.sigma2,
                "c_fit": self.c_fit,
                "estimate": self.estimate,
                "note": "slope consistency check at finite n, not a proof of the asymptotic rate",
            }),
        );
        r
    }
}

/// `sup_t |B_n(t) − σB(t)|` for the Donsker line `B_n(t) = n^{-1/2}(S_{[nt]} +
/// (nt − [nt]) X_{[nt]})` against the piecewise-linear Gaussian line built
/// from the same `Z` increments. On `[k/n, (k+1)/n)` the difference is
/// affine, so its sup is attained at the ends.
pub fn donsker_sup(path: &CoupledPath) -> f64 {
    let n = path.len();
    let mut sup = 0.0f64;
    for k in 0..n {
        let d = path.s[k] - path.t[k];
        let xk = if k == 0 { 0.0 } else { path.x[k - 1] };
        sup = sup.max(d.abs()).max((d + xk - path.z[k]).abs());
    }
    sup = sup.max((path.s[n] - path.t[n]).abs());
    sup / (n as f64).sqrt()
}

fn donsker_stat(path: &CoupledPath, sup_norm: f64) -> siplab_core::Result<f64> {
    let n = path.len() as f64;
    let (breakpoints, _) = coupling_errors(path)?;
    let sup = donsker_sup(path);
    let max_z = path.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let lo = breakpoints / n.sqrt();
    let hi = lo + (sup_norm + max_z) / n.sqrt();
    let tol = 1e-12 * (1.0 + hi);
    if sup < lo - tol || sup > hi + tol {
        return Err(Error::InvariantViolated(format!(
            "Donsker sup {sup} outside [{lo}, {hi}]"
        )));
    }
    Ok(sup)
}

#[derive(Debug, Clone, Serialize)]
pub struct DonskerRow {
    pub n: u64,
    /// `‖sup_t|B_n − σB|‖₂`, an upper bound on `W₂`.
    pub w2_upper: f64,
    pub log_var: f64,
    /// `n^{-1/6}` matched at the first `n`; reference only.
    pub liu_wang_ref: f64,
    /// `n^{-1/4}(log n)^{1/4}` matched at the first `n`.
    pub predicted_ref: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DonskerReport {
    pub sigma2: f64,
    pub rows: Vec<DonskerRow>,
    pub estimate: RateEstimate,
}

pub fn donsker_wasserstein(cfg: &ExperimentConfig) -> CliResult<DonskerReport> {
    cfg.validate_rate()?;
    let process = cfg.process.build()?;
    let chain = require_chain(&process)?;
    let sigma2 = positive_sigma2(chain)?;
    let sup_norm = chain.sup_norm();
    let mut sums: Vec<RmsSummary> = Vec::new();
    for &n in &cfg.n_list {
        let v = coupled_statistic(
            cfg,
            chain,
            sigma2,
            cfg.schedule.p,
            n,
            cfg.seed,
            FAMILY_DONSKER,
            |p| donsker_stat(p, sup_norm),
        )?;
        sums.push(rms_summary(&v));
    }
    let n0 = cfg.n_list[0] as f64;
    let w0 = sums[0].rms;
    let rows = cfg
        .n_list
        .iter()
        .zip(&sums)
        .map(|(&n, s)| {
            let ratio = n as f64 / n0;
            DonskerRow {
                n,
                w2_upper: s.rms,
                log_var: s.log_rms_var,
                liu_wang_ref: w0 * ratio.powf(-1.0 / 6.0),
                predicted_ref: w0 * ratio.powf(-0.25) * ((n as f64).ln() / n0.ln()).powf(0.25),
            }
        })
        .collect();
    let estimate = fit_rate(
        &cfg.n_list,
        &sums,
        -0.25,
        cfg.tolerance.unwrap_or(DONSKER_TOLERANCE),
        cfg.log_correction,
    )?;
    Ok(DonskerReport {
        sigma2,
        rows,
        estimate,
    })
}

impl DonskerReport {
    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|x| {
                vec![
                    x.n.to_string(),
                    num(x.w2_upper),
                    num(x.log_var),
                    num(x.liu_wang_ref),
                    num(x.predicted_ref),
                ]
            })
            .collect();
        let header = ["n", "w2_upper", "log_var", "liu_wang_ref", "predicted_ref"];
        r.add_csv("wasserstein.csv", &header, &rows);
        r.add_dat("wasserstein.dat", &header, &rows);
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "wasserstein",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "sigma2": self.sigma2,
                "estimate": self.estimate,
                "reference_lines": {
                    "liu_wang": "n^(-1/6), for comparison only",
                    "predicted": "n^(-1/4) (log n)^(1/4)",
                },
            }),
        );
        r
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRow {
    pub n: u64,
    /// `‖max_{k≤n}|S_k|‖₂` over orbit replicates.
    pub max_norm: f64,
}

/// Surrogate coupled rate and direct orbit statistics for the LSV map.
#[derive(Debug, Clone, Serialize)]
pub struct LsvReport {
    pub gamma: f64,
    pub target: f64,
    /// Coupled rate of the finite surrogate chain.
    pub surrogate: Option<RateReport>,
    /// Direct orbit fluctuation growth (not a coupling rate).
    pub orbit: Vec<OrbitRow>,
    pub orbit_growth: Option<LineFit>,
}

/// Target exponent `max(γ, 1/4)` for `γ ∈ (0, 1/2)`.
pub fn lsv_target(gamma: f64) -> CliResult<f64> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(CliError::Config(format!(
            "gamma = {gamma} outside (0, 1/2), where no rate is predicted"
        )));
    }
    Ok(gamma.max(0.25))
}

pub fn run_lsv_experiment(cfg: &ExperimentConfig) -> CliResult<LsvReport> {
    let ProcessSpec::Lsv { gamma, .. } = &cfg.process else {
        return Err(CliError::Config(
            "the lsv pipeline needs an lsv process".into(),
        ));
    };
    let gamma = *gamma;
    let target = lsv_target(gamma)?;
    cfg.validate_rate()?;
    let lsv_cfg = cfg.lsv.clone().unwrap_or_default();
    let surrogate = if lsv_cfg.max_excursion > 0 {
        let chain = intermittent_surrogate(gamma, lsv_cfg.max_excursion)?;
        let p = (1.0 / gamma).min(4.0);
        let tol = cfg.tolerance.unwrap_or(LSV_TOLERANCE);
        Some(coupled_rate(cfg, &chain, p, target, tol)?)
    } else {
        None
    };
    let (orbit, orbit_growth) = if lsv_cfg.orbit_replicates > 0 {
        let process: Process = cfg.process.build()?;
        let mut orbit = Vec::with_capacity(cfg.n_list.len());
        for &n in &cfg.n_list {
            let base = derive_seed(cfg.seed, FAMILY_ORBIT, n);
            let maxima: siplab_core::Result<Vec<f64>> = (0..lsv_cfg.orbit_replicates)
                .into_par_iter()
                .map(|r| {
                    path_extremes(&process, n as usize, derive_seed(base, 0, r)).map(|e| e.abs_max)
                })
                .collect();
            orbit.push(OrbitRow {
                n,
                max_norm: rms_summary(&maxima?).rms,
            });
        }
        let x: Vec<f64> = orbit.iter().map(|o| (o.n as f64).ln()).collect();
        let y: Vec<f64> = orbit
            .iter()
            .map(|o| o.max_norm.max(f64::MIN_POSITIVE).ln())
            .collect();
        let growth = fit_line(&x, &y, None)?;
        (orbit, Some(growth))
    } else {
        (Vec::new(), None)
    };
    Ok(LsvReport {
        gamma,
        target,
        surrogate,
        orbit,
        orbit_growth,
    })
}

impl LsvReport {
    pub fn estimate(&self) -> Option<&RateEstimate> {
        self.surrogate.as_ref().map(|s| &s.estimate)
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let mut r = Report::new();
        if let Some(s) = &self.surrogate {
            s.tables(&mut r, "surrogate_rates");
        }
        if !self.orbit.is_empty() {
            let rows: Vec<Vec<String>> = self
                .orbit
                .iter()
                .map(|o| vec![o.n.to_string(), num(o.max_norm)])
                .collect();
            r.add_csv("orbit.csv", &["n", "max_norm"], &rows);
        }
        r.add_json(
            "summary.json",
            &json!({
                "pipeline": "rates (lsv)",
                "config": config_echo(cfg),
                "seed": cfg.seed,
                "gamma": self.gamma,
                "target": self.target,
                "surrogate_coupled_rate": self.surrogate.as_ref().map(|s| json!({
                    "sigma2": s.sigma2,
                    "p": s.p,
                    "c_fit": s.c_fit,
                    "estimate": s.estimate,
                })),
                "direct_orbit_growth": self.orbit_growth,
            }),
        );
        r
    }
}
