use crate::error::{invalid, Result};
use crate::processes::{path_extremes, Process};
use crate::rng::derive_seed;
use crate::stats::clopper_pearson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const FAMILY_TAIL: u64 = 0x7461_696c;

/// Which running maximum a tail probability refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailStatistic {
    /// `max_{k≤n} S_k`.
    #[default]
    OneSided,
    /// `max_{k≤n} |S_k|`.
    Absolute,
}

/// Monte Carlo estimate of `P(S_n* ≥ x)` with a 95% Clopper-Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: u64,
    pub x: f64,
    pub hits: u64,
    pub replicates: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TailEstimate {
    pub(crate) fn from_counts(n: u64, x: f64, hits: u64, replicates: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, replicates, 0.05);
        Self {
            n,
            x,
            hits,
            replicates,
            p_hat: hits as f64 / replicates as f64,
            ci_low,
            ci_high,
        }
    }
}

/// Seed of replicate `r` at path length `n`.
pub(crate) fn replicate_seed(seed: u64, n: u64, r: u64) -> u64 {
    derive_seed(derive_seed(seed, FAMILY_TAIL, n), 0, r)
}

/// Running maxima of `replicates` independent paths of length `n`, in
/// replicate order.
pub(crate) fn replicate_maxima(
    process: &Process,
    n: u64,
    replicates: u64,
    seed: u64,
    statistic: TailStatistic,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let e = path_extremes(process, n as usize, replicate_seed(seed, n, r))?;
            Ok(match statistic {
                TailStatistic::OneSided => e.max,
                TailStatistic::Absolute => e.abs_max,
            })
        })
        .collect()
}

/// Tail estimates at several levels from one shared set of paths.
pub fn tail_curve(
    process: &Process,
    n: u64,
    xs: &[f64],
    replicates: u64,
    seed: u64,
    statistic: TailStatistic,
) -> Result<Vec<TailEstimate>> {
    if replicates < 100 {
        return invalid("at least 100 replicates are required");
    }
    if n == 0 {
        return invalid("path length must be at least 1");
    }
    let maxima = replicate_maxima(process, n, replicates, seed, statistic)?;
    Ok(xs
        .iter()
        .map(|&x| {
            let hits = maxima.iter().filter(|&&m| m >= x).count() as u64;
            TailEstimate::from_counts(n, x, hits, replicates)
        })
        .collect())
}

/// `P(max_{k≤n} S_k ≥ x)` by Monte Carlo.
pub fn empirical_tail(
    process: &Process,
    n: u64,
    x: f64,
    replicates: u64,
    seed: u64,
) -> Result<TailEstimate> {
    Ok(tail_curve(process, n, &[x], replicates, seed, TailStatistic::OneSided)?[0])
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `(n, x)` points with `x` log-spaced in `[2√n, n·sup_norm/2]`, which
/// straddles the Gaussian and polynomial regimes.
pub fn standard_grid(ns: &[u64], per_n: usize, sup_norm: f64) -> Vec<(u64, f64)> {
    ns.iter()
        .flat_map(|&n| {
            let nf = n as f64;
            log_grid(2.0 * nf.sqrt(), nf * sup_norm / 2.0, per_n)
                .into_iter()
                .map(move |x| (n, x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::FiniteChain;

    fn iid() -> Process {
        FiniteChain::flip(0.5).unwrap().into()
    }

    #[test]
    fn level_zero_is_certain() {
        let t = empirical_tail(&iid(), 50, 0.0, 200, 1).unwrap();
        assert_eq!(t.p_hat, 1.0);
    }

    #[test]
    fn beyond_range_is_impossible() {
        let t = empirical_tail(&iid(), 50, 50.5, 200, 1).unwrap();
        assert_eq!(t.p_hat, 0.0);
        assert_eq!(t.ci_low, 0.0);
    }

    #[test]
    fn curve_matches_single_queries() {
        let curve = tail_curve(&iid(), 64, &[4.0, 8.0], 300, 5, TailStatistic::OneSided).unwrap();
        assert_eq!(curve[1], empirical_tail(&iid(), 64, 8.0, 300, 5).unwrap());
        assert!(curve[0].p_hat >= curve[1].p_hat);
    }

    #[test]
    fn too_few_replicates() {
        assert!(empirical_tail(&iid(), 10, 1.0, 50, 1).is_err());
    }

    #[test]
    fn grid_spans_regimes() {
        let g = standard_grid(&[256], 6, 1.0);
        assert_eq!(g.len(), 6);
        assert!((g[0].1 - 32.0).abs() < 1e-12 && (g[5].1 - 128.0).abs() < 1e-9);
    }
}
