//! Power-law fits of error statistics against `n`.

use serde::{Deserialize, Serialize};
use siplab_core::stats::{fit_line, fit_two_regressors, mean, LineFit};

/// Outcome of a slope check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The error series is identically zero, so no slope exists.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub exponent: f64,
    pub exponent_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_correction: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl RateEstimate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Root mean square of the replicate errors and the delta-method variance
/// of its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsSummary {
    pub rms: f64,
    pub log_rms_var: f64,
}

pub fn rms_summary(errors: &[f64]) -> RmsSummary {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let m2 = mean(&sq);
    let r = sq.len() as f64;
    let var_sq = if sq.len() > 1 {
        sq.iter().map(|s| (s - m2).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    // log rms = ½ log m₂, so Var ≈ Var(m̂₂) / (4 m₂²).
    let log_rms_var = if m2 > 0.0 {
        var_sq / r / (4.0 * m2 * m2)
    } else {
        0.0
    };
    RmsSummary {
        rms: m2.sqrt(),
        log_rms_var,
    }
}

/// Regresses `log rms` on `log n`, weighted by the delta-method variances
/// when all are positive.
pub fn fit_rate(
    ns: &[u64],
    rows: &[RmsSummary],
    target: f64,
    tolerance: f64,
    log_correction: bool,
) -> siplab_core::Result<RateEstimate> {
    let scale = rows.iter().map(|r| r.rms).fold(0.0, f64::max);
    if scale <= 1e-12 {
        return Ok(RateEstimate {
            exponent: 0.0,
            exponent_se: 0.0,
            log_correction: None,
            target,
            tolerance,
            verdict: Verdict::NotApplicable,
        });
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r.rms.max(f64::MIN_POSITIVE).ln())
        .collect();
    let vars: Vec<f64> = rows.iter().map(|r| r.log_rms_var).collect();
    let weighted = vars.iter().all(|&v| v > 0.0);
    let line: LineFit = fit_line(&x, &y, weighted.then_some(vars.as_slice()))?;
    let (exponent, correction) = if log_correction {
        let ll: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let [_, b1, b2] = fit_two_regressors(&x, &ll, &y)?;
        (b1, Some(b2))
    } else {
        (line.slope, None)
    };
    let verdict = if (exponent - target).abs() <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(RateEstimate {
        exponent,
        exponent_se: line.slope_se,
        log_correction: correction,
        target,
        tolerance,
        verdict,
    })
}
