use super::{TailModel, ThetaTable};
use crate::error::{invalid, Result};
use serde::Serialize;

/// Terms summed one by one before switching to the integral remainder.
const DIRECT_TERMS: u64 = 100_000;

fn power_integral(s: f64, lo: f64, hi: f64) -> f64 {
    if hi.is_infinite() {
        if s >= -1.0 {
            return f64::INFINITY;
        }
        return -lo.powf(s + 1.0) / (s + 1.0);
    }
    if (s + 1.0).abs() < 1e-15 {
        (hi / lo).ln()
    } else {
        (hi.powf(s + 1.0) - lo.powf(s + 1.0)) / (s + 1.0)
    }
}

/// `Σ_{k=a}^{b} k^s (1 + 1/k)^e` for `a ≥ 1` (`b = None` for an infinite
/// sum). Beyond [`DIRECT_TERMS`] terms the remainder is the midpoint
/// integral of the second-order expansion in `1/k`, accurate to `O(a^{-2})`
/// relative.
pub(crate) fn power_sum(a: u64, b: Option<u64>, s: f64, e: f64) -> f64 {
    let a = a.max(1);
    if let Some(b) = b {
        if b < a {
            return 0.0;
        }
    } else if s >= -1.0 {
        return f64::INFINITY;
    }
    let direct_end = match b {
        Some(b) => b.min(a + DIRECT_TERMS - 1),
        None => a + DIRECT_TERMS - 1,
    };
    let term = |k: f64| k.powf(s) * (1.0 + 1.0 / k).powf(e);
    let mut total: f64 = (a..=direct_end).map(|k| term(k as f64)).sum();
    if b.is_some_and(|b| b == direct_end) {
        return total;
    }
    let lo = direct_end as f64 + 0.5;
    let hi = b.map_or(f64::INFINITY, |b| b as f64 + 0.5);
    total += power_integral(s, lo, hi)
        + e * power_integral(s - 1.0, lo, hi)
        + 0.5 * e * (e - 1.0) * power_integral(s - 2.0, lo, hi);
    total
}

/// `Σ_{k=a}^{b} k^j r^k`, `j ∈ {0, 1, 2}`, by direct summation until terms
/// fall below double precision of the running total.
fn geometric_weighted(a: u64, b: Option<u64>, j: i32, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let end = b.unwrap_or(u64::MAX);
    let mut total = 0.0;
    let mut k = a;
    let mut rk = r.powf(a as f64);
    while k <= end {
        let t = (k as f64).powi(j) * rk;
        total += t;
        // The ratio of consecutive terms is below 1 once k > j / (1/r - 1).
        if t <= 1e-18 * total && (k as f64) * (1.0 - r) > j as f64 || rk == 0.0 {
            break;
        }
        k += 1;
        rk *= r;
    }
    total
}

/// `Σ_{k=a}^{b} k^j (1 + 1/k)^e θ(k)` under the tail model (`a > K`); `e`
/// must be 0 for geometric tails.
fn tail_moment(tail: TailModel, a: u64, b: Option<u64>, j: i32, e: f64) -> f64 {
    match tail {
        TailModel::Zero => 0.0,
        TailModel::Geometric { scale, rate } => scale * geometric_weighted(a, b, j, rate),
        TailModel::Polynomial { scale, p } => {
            if scale == 0.0 {
                0.0
            } else {
                scale * power_sum(a, b, j as f64 + 1.0 - p, e)
            }
        }
    }
}

/// `Θ₁ = 1 + Σ_{k≥1} θ(k)`, `Θ₂ = 1 + Σ_{k≥1} k θ(k)` and the weighted
/// series `x ↦ Σ_{k≥1} k (k ∧ x) θ(k)`. Divergent sums are `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub sigma2: Option<f64>,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(skip)]
    table: ThetaTable,
}

pub fn series_summary(table: &ThetaTable) -> SeriesSummary {
    let kmax = table.horizon() as u64;
    let v = table.values();
    let head1: f64 = v.iter().skip(1).sum();
    let head2: f64 = v
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, t)| k as f64 * t)
        .sum();
    let tail = table.tail();
    SeriesSummary {
        sigma2: None,
        theta1: 1.0 + head1 + tail_moment(tail, kmax + 1, None, 0, 0.0),
        theta2: 1.0 + head2 + tail_moment(tail, kmax + 1, None, 1, 0.0),
        table: table.clone(),
    }
}

impl SeriesSummary {
    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = Some(sigma2);
        self
    }

    pub fn table(&self) -> &ThetaTable {
        &self.table
    }

    pub fn theta2_finite(&self) -> bool {
        self.theta2.is_finite()
    }

    /// `Σ_{k≥1} k (k ∧ x) θ(k)`.
    pub fn weighted(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let v = self.table.values();
        let kmax = self.table.horizon() as u64;
        let head: f64 = v
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, t)| k as f64 * (k as f64).min(x) * t)
            .sum();
        let tail = self.table.tail();
        let split = if x.is_finite() {
            x.floor() as u64
        } else {
            u64::MAX
        };
        // k ≤ ⌊x⌋ contributes k² θ(k); k > ⌊x⌋ contributes x k θ(k).
        let low = if split > kmax {
            tail_moment(tail, kmax + 1, Some(split), 2, 0.0)
        } else {
            0.0
        };
        let high_from = split.max(kmax).saturating_add(1);
        let high = if high_from == u64::MAX {
            0.0
        } else {
            let m = tail_moment(tail, high_from, None, 1, 0.0);
            if m == 0.0 {
                0.0
            } else {
                x * m
            }
        };
        head + low + high
    }

    /// JSON object with the sums and their finiteness flags.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sigma2": self.sigma2,
            "theta1": if self.theta1.is_finite() { Some(self.theta1) } else { None },
            "theta2": if self.theta2.is_finite() { Some(self.theta2) } else { None },
            "theta1_finite": self.theta1.is_finite(),
            "theta2_finite": self.theta2.is_finite(),
            "horizon": self.table.horizon(),
            "tail": self.table.tail(),
            "kind": self.table.kind(),
        })
    }
}

/// `q (2M)^q Σ_{k≥0} (k+1)^{q-1} θ(k)`, `+∞` when the series diverges
/// under the tail model.
pub fn degenerate_moment_bound(m: f64, q: f64, table: &ThetaTable) -> Result<f64> {
    if !(q >= 1.0) {
        return invalid("q must be at least 1");
    }
    if !(m >= 0.0) {
        return invalid("M must be nonnegative");
    }
    let head: f64 = table
        .values()
        .iter()
        .enumerate()
        .map(|(k, t)| (k as f64 + 1.0).powf(q - 1.0) * t)
        .sum();
    let kmax = table.horizon() as u64;
    // (k+1)^{q-1} θ(k) = k^{q-1} (1 + 1/k)^{q-1} θ(k).
    let tail = match table.tail() {
        TailModel::Zero => 0.0,
        TailModel::Geometric { scale, rate } => {
            let mut total = 0.0;
            let mut k = kmax + 1;
            loop {
                let kf = k as f64;
                let t = scale * (kf + 1.0).powf(q - 1.0) * rate.powf(kf);
                total += t;
                if t == 0.0 || (t <= 1e-18 * total && kf * (1.0 - rate) > q) {
                    break;
                }
                k += 1;
            }
            total
        }
        TailModel::Polynomial { scale, p } => {
            if scale == 0.0 {
                0.0
            } else {
                scale * power_sum(kmax + 1, None, q - p, q - 1.0)
            }
        }
    };
    Ok(q * (2.0 * m).powf(q) * (head + tail))
}
