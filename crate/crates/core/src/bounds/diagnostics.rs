use super::tail::{replicate_maxima, replicate_seed, TailEstimate, TailStatistic};
use crate::coefficients::{degenerate_moment_bound, sigma2_exact, ThetaTable};
use crate::error::{invalid, Error, Result};
use crate::processes::{path_extremes, Process};
use crate::stats::{fit_line, LineFit};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One term `n^{αp−2} P(S_n* ≥ εn^α)` of the convergence series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub level: f64,
    pub estimate: TailEstimate,
    pub weight: f64,
    pub summand: f64,
    pub summand_ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub alpha: f64,
    pub p: f64,
    pub epsilon: f64,
    pub strict: bool,
    pub statistic: TailStatistic,
    pub rows: Vec<SeriesRow>,
    /// Last summand below the first, or the summands have reached 0.
    pub decays: bool,
}

/// Tabulates `n^{αp−2} P(S_n* ≥ εn^α)` over `n_list`. With `strict` the
/// event is `S_n* > εn^α`.
#[allow(clippy::too_many_arguments)]
pub fn series_convergence_check(
    process: &Process,
    alpha: f64,
    p: f64,
    epsilon: f64,
    n_list: &[u64],
    replicates: u64,
    seed: u64,
    statistic: TailStatistic,
    strict: bool,
) -> Result<SeriesCheck> {
    if n_list.is_empty() {
        return invalid("empty n_list");
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(epsilon > 0.0) || !(p > 0.0) {
        return invalid("alpha must lie in (0, 1], epsilon and p must be positive");
    }
    if replicates < 100 {
        return invalid("at least 100 replicates are required");
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let level = epsilon * (n as f64).powf(alpha);
        let maxima = replicate_maxima(process, n, replicates, seed, statistic)?;
        let hits = maxima
            .iter()
            .filter(|&&m| if strict { m > level } else { m >= level })
            .count() as u64;
        let estimate = TailEstimate::from_counts(n, level, hits, replicates);
        let weight = (n as f64).powf(alpha * p - 2.0);
        rows.push(SeriesRow {
            level,
            estimate,
            weight,
            summand: weight * estimate.p_hat,
            summand_ci_high: weight * estimate.ci_high,
        });
    }
    let first = rows[0].summand;
    let last = rows[rows.len() - 1].summand;
    Ok(SeriesCheck {
        alpha,
        p,
        epsilon,
        strict,
        statistic,
        decays: last < first || last == 0.0,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: u64,
    /// Monte Carlo `E|S_n|^q`.
    pub moment: f64,
    pub moment_se: f64,
    /// `q (2M)^q Σ (k+1)^{q-1} θ(k)`, independent of `n`.
    pub bound: f64,
    /// `(E (max_{k≤n} |S_k|)^r)^{1/r}`.
    pub max_norm: f64,
    /// `C n^{1/p}` with `C` matched at the smallest `n`.
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateMomentReport {
    pub q: f64,
    pub r: f64,
    pub p: f64,
    pub sigma2: f64,
    pub rows: Vec<MomentRow>,
    /// Slope of `log max_norm` against `log n`.
    pub growth: LineFit,
    pub below_bound: bool,
}

/// Moments of a degenerate process against the `n`-free moment bound, and
/// the growth of `‖max_{k≤n}|S_k|‖_r`. `theta` must hold `θ_{X,1,1}`.
#[allow(clippy::too_many_arguments)]
pub fn degenerate_moment_check(
    process: &Process,
    theta: &ThetaTable,
    q: f64,
    r: f64,
    p: f64,
    n_list: &[u64],
    replicates: u64,
    seed: u64,
) -> Result<DegenerateMomentReport> {
    let chain = process
        .as_chain()
        .ok_or_else(|| Error::Unsupported("degenerate check needs a finite chain".into()))?;
    let sigma2 = sigma2_exact(chain)?.value;
    if sigma2.abs() > 1e-6 {
        return Err(Error::NotDegenerate(sigma2));
    }
    if n_list.len() < 2 {
        return invalid("n_list needs at least two lengths");
    }
    if !(q >= 1.0) || !(r >= 1.0) || !(p > 0.0) {
        return invalid("q and r must be at least 1, p positive");
    }
    if replicates < 2 {
        return invalid("at least 2 replicates are required");
    }
    let bound = degenerate_moment_bound(process.sup_norm(), q, theta)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let stats: Vec<(f64, f64)> = (0..replicates)
            .into_par_iter()
            .map(|i| {
                let e = path_extremes(process, n as usize, replicate_seed(seed, n, i))?;
                Ok((e.last.abs().powf(q), e.abs_max.powf(r)))
            })
            .collect::<Result<_>>()?;
        let reps = replicates as f64;
        let moment = stats.iter().map(|s| s.0).sum::<f64>() / reps;
        let var = stats.iter().map(|s| (s.0 - moment).powi(2)).sum::<f64>() / (reps - 1.0);
        let max_norm = (stats.iter().map(|s| s.1).sum::<f64>() / reps).powf(1.0 / r);
        rows.push(MomentRow {
            n,
            moment,
            moment_se: (var / reps).sqrt(),
            bound,
            max_norm,
            reference: f64::NAN,
        });
    }
    let c = rows[0].max_norm / (rows[0].n as f64).powf(1.0 / p);
    for row in &mut rows {
        row.reference = c * (row.n as f64).powf(1.0 / p);
    }
    let growth = if rows.iter().all(|r| r.max_norm == 0.0) {
        // Identically zero sums: no growth at all.
        LineFit {
            slope: 0.0,
            intercept: f64::NEG_INFINITY,
            slope_se: 0.0,
        }
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.max_norm.ln()).collect();
        fit_line(&xs, &ys, None)?
    };
    Ok(DegenerateMomentReport {
        q,
        r,
        p,
        sigma2,
        below_bound: rows.iter().all(|row| row.moment <= row.bound),
        rows,
        growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::TailModel;
    use crate::processes::FiniteChain;

    #[test]
    fn nondegenerate_input_is_rejected() {
        let p: Process = FiniteChain::flip(0.25).unwrap().into();
        let t = ThetaTable::new(
            vec![1.0, 0.5],
            TailModel::Geometric {
                scale: 1.0,
                rate: 0.5,
            },
            crate::coefficients::CoefficientKind::Theta { p: 1, q: 1 },
            1.0,
        )
        .unwrap();
        let e = degenerate_moment_check(&p, &t, 2.0, 2.0, 4.0, &[10, 100], 100, 1);
        assert!(matches!(e, Err(Error::NotDegenerate(s)) if (s - 3.0).abs() < 1e-8));
    }

    #[test]
    fn zero_observable_has_zero_moments() {
        let c = FiniteChain::flip(0.25)
            .unwrap()
            .make_coboundary(&[1.0, 1.0])
            .unwrap();
        let t = ThetaTable::new(
            vec![0.0],
            TailModel::Zero,
            crate::coefficients::CoefficientKind::Theta { p: 1, q: 1 },
            0.0,
        )
        .unwrap();
        let p: Process = c.into();
        let rep = degenerate_moment_check(&p, &t, 1.0, 2.0, 4.0, &[10, 100], 50, 1).unwrap();
        assert!(rep
            .rows
            .iter()
            .all(|row| row.moment == 0.0 && row.bound == 0.0));
        assert_eq!(rep.growth.slope, 0.0);
        assert!(rep.below_bound);
    }

    #[test]
    fn doubling_epsilon_shrinks_summands() {
        let p: Process = FiniteChain::flip(0.5).unwrap().into();
        let a = series_convergence_check(
            &p,
            0.75,
            4.0,
            1.0,
            &[64, 256],
            400,
            3,
            TailStatistic::OneSided,
            false,
        )
        .unwrap();
        let b = series_convergence_check(
            &p,
            0.75,
            4.0,
            2.0,
            &[64, 256],
            400,
            3,
            TailStatistic::OneSided,
            false,
        )
        .unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(y.summand <= x.summand);
        }
    }
}
