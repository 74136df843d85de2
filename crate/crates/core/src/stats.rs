//! Small statistical helpers: confidence intervals, Kolmogorov-Smirnov,
//! exponent regression.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

/// Two-sided Clopper-Pearson interval for `successes` out of `trials` at
/// confidence `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        inv_beta_reg(k, n - k + 1.0, alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Asymptotic Kolmogorov survival function Q(λ).
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        samples: xs.len(),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Least-squares line `y = intercept + slope * x`.
///
/// With `variances`, the fit is weighted by `1/variance` and the slope
/// standard error is the model-based one; otherwise it comes from the
/// residual scatter.
pub fn fit_line(x: &[f64], y: &[f64], variances: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("fit_line needs at least two paired points");
    }
    let w: Vec<f64> = match variances {
        Some(v) => {
            if v.len() != x.len() || v.iter().any(|&s| !(s > 0.0)) {
                return invalid("variances must be positive and paired");
            }
            v.iter().map(|s| 1.0 / s).collect()
        }
        None => vec![1.0; x.len()],
    };
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return invalid("degenerate abscissae");
    }
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if variances.is_some() {
        (1.0 / sxx).sqrt()
    } else if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (x.len() as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Ordinary least squares for `y = b0 + b1 x1 + b2 x2`; returns `[b0, b1, b2]`.
pub fn fit_two_regressors(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<[f64; 3]> {
    use nalgebra::{Matrix3, Vector3};
    if x1.len() != y.len() || x2.len() != y.len() || y.len() < 3 {
        return invalid("two-regressor fit needs at least three paired points");
    }
    let mut m = Matrix3::zeros();
    let mut r = Vector3::zeros();
    for i in 0..y.len() {
        let row = Vector3::new(1.0, x1[i], x2[i]);
        m += row * row.transpose();
        r += row * y[i];
    }
    let sol = m
        .lu()
        .solve(&r)
        .ok_or_else(|| crate::Error::InvalidArgument("collinear regressors".into()))?;
    Ok([sol[0], sol[1], sol[2]])
}
