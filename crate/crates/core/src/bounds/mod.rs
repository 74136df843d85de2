//! Fuk-Nagaev right-hand side, Monte Carlo tail estimates, constant fitting
//! and the series diagnostics for the nondegenerate and degenerate cases.

mod diagnostics;
mod fit;
mod tail;

pub use diagnostics::{
    degenerate_moment_check, series_convergence_check, DegenerateMomentReport, MomentRow,
    SeriesCheck, SeriesRow,
};
pub use fit::{fit_constants, validate_constants, FitResult, GridPoint, SEARCH_MAX, SEARCH_MIN};
pub use tail::{empirical_tail, log_grid, standard_grid, tail_curve, TailEstimate, TailStatistic};

use crate::coefficients::SeriesSummary;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Inputs of the two-term bound
/// `c₁ 1{σ²>0} (nσ²/x²)⁴ e^{−x²/(16nσ²)} + c₂ (n/x⁴)(Θ₁Θ₂ + Σ_k k(k∧x)θ(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FukNagaevParams {
    pub n: u64,
    pub x: f64,
    pub sigma2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub weighted_x: f64,
    pub c1: f64,
    pub c2: f64,
}

impl FukNagaevParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n >= 1
            && self.x > 0.0
            && self.sigma2 >= 0.0
            && self.theta1 >= 1.0
            && self.theta2 >= 1.0
            && self.weighted_x >= 0.0
            && self.c1 > 0.0
            && self.c2 > 0.0
            && [
                self.x,
                self.sigma2,
                self.theta1,
                self.theta2,
                self.weighted_x,
                self.c1,
                self.c2,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid bound parameters {self:?}"))
        }
    }
}

/// Gaussian and polynomial terms without their constants.
fn terms(p: &FukNagaevParams) -> (f64, f64) {
    let n = p.n as f64;
    let gauss = if p.sigma2 > 0.0 {
        let v = n * p.sigma2;
        (v / (p.x * p.x)).powi(4) * (-p.x * p.x / (16.0 * v)).exp()
    } else {
        0.0
    };
    let poly = n / p.x.powi(4) * (p.theta1 * p.theta2 + p.weighted_x);
    (gauss, poly)
}

pub fn fuk_nagaev_rhs(p: &FukNagaevParams) -> f64 {
    debug_assert!(p.validate().is_ok());
    let (g, h) = terms(p);
    p.c1 * g + p.c2 * h
}

/// Variance rate and coefficient series of a (normalized) process: all the
/// bound needs apart from `(n, x)` and the constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundModel {
    pub sigma2: f64,
    pub summary: SeriesSummary,
}

impl BoundModel {
    /// Refuses summaries whose `Θ₂` diverges.
    pub fn new(sigma2: f64, summary: SeriesSummary) -> Result<Self> {
        if !(sigma2 >= -1e-10) {
            return invalid("sigma2 must be nonnegative");
        }
        if !summary.theta2_finite() {
            return Err(Error::Unsupported(
                "Θ₂ diverges under the declared tail; the bound is vacuous".into(),
            ));
        }
        Ok(Self {
            sigma2: sigma2.max(0.0),
            summary,
        })
    }

    pub fn params(&self, n: u64, x: f64, c1: f64, c2: f64) -> FukNagaevParams {
        FukNagaevParams {
            n,
            x,
            sigma2: self.sigma2,
            theta1: self.summary.theta1,
            theta2: self.summary.theta2,
            weighted_x: self.summary.weighted(x),
            c1,
            c2,
        }
    }

    /// `(gauss, poly)` with `rhs = c₁·gauss + c₂·poly`.
    pub fn terms(&self, n: u64, x: f64) -> (f64, f64) {
        terms(&self.params(n, x, 1.0, 1.0))
    }

    pub fn rhs(&self, n: u64, x: f64, c1: f64, c2: f64) -> f64 {
        fuk_nagaev_rhs(&self.params(n, x, c1, c2))
    }
}
