use super::tail::{tail_curve, TailEstimate, TailStatistic};
use super::BoundModel;
use crate::error::{invalid, Error, Result};
use crate::processes::Process;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SEARCH_MIN: f64 = 1e-3;
pub const SEARCH_MAX: f64 = 1e6;
const PER_DECADE: usize = 20;

fn search_values() -> Vec<f64> {
    let decades = (SEARCH_MAX / SEARCH_MIN).log10().round() as usize;
    (0..=decades * PER_DECADE)
        .map(|i| SEARCH_MIN * 10f64.powf(i as f64 / PER_DECADE as f64))
        .collect()
}

/// One `(n, x)` point: the empirical tail and the two bound terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub estimate: TailEstimate,
    pub gauss: f64,
    pub poly: f64,
    /// Bound with the fitted (or validated) constants.
    pub rhs: f64,
    /// Within one search step of the empirical upper CI.
    pub binding: bool,
}

impl GridPoint {
    pub fn dominated(&self) -> bool {
        self.rhs >= self.estimate.ci_high
    }
}

/// Smallest constants on the search grid that dominate every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub c1: f64,
    pub c2: f64,
    /// False when σ² = 0 removes the Gaussian term.
    pub c1_relevant: bool,
    pub points: Vec<GridPoint>,
}

impl FitResult {
    pub fn binding(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter(|p| p.binding)
    }
}

fn estimate_grid(
    process: &Process,
    model: &BoundModel,
    grid: &[(u64, f64)],
    replicates: u64,
    seed: u64,
) -> Result<Vec<GridPoint>> {
    if grid.is_empty() {
        return invalid("empty (n, x) grid");
    }
    let mut by_n: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(n, x) in grid {
        if !(x > 0.0) {
            return invalid("grid levels must be positive");
        }
        by_n.entry(n).or_default().push(x);
    }
    let mut estimates = BTreeMap::new();
    for (&n, xs) in &by_n {
        let curve = tail_curve(process, n, xs, replicates, seed, TailStatistic::OneSided)?;
        for (x, est) in xs.iter().zip(curve) {
            estimates.insert((n, x.to_bits()), est);
        }
    }
    Ok(grid
        .iter()
        .map(|&(n, x)| {
            let (gauss, poly) = model.terms(n, x);
            GridPoint {
                estimate: estimates[&(n, x.to_bits())],
                gauss,
                poly,
                rhs: f64::NAN,
                binding: false,
            }
        })
        .collect())
}

fn finish(points: &mut [GridPoint], c1: f64, c2: f64) {
    let step = 10f64.powf(1.0 / PER_DECADE as f64);
    for p in points {
        p.rhs = c1 * p.gauss + c2 * p.poly;
        p.binding = p.estimate.ci_high * step >= p.rhs;
    }
}

/// Fits `(c₁, c₂)` on a log-spaced search box `[1e-3, 1e6]²` (20 points
/// per decade): for each `c₁` the smallest admissible `c₂` is found, and the
/// pair with the smallest product wins (ties go to the smaller `c₂`).
///
/// `process` must already be normalized consistently with `model`.
pub fn fit_constants(
    process: &Process,
    model: &BoundModel,
    grid: &[(u64, f64)],
    replicates: u64,
    seed: u64,
) -> Result<FitResult> {
    let mut points = estimate_grid(process, model, grid, replicates, seed)?;
    let values = search_values();
    let c1_relevant = points.iter().any(|p| p.gauss > 0.0);
    let c1_candidates: &[f64] = if c1_relevant { &values } else { &values[..1] };
    let mut best: Option<(f64, f64)> = None;
    for &c1 in c1_candidates {
        let mut need = 0.0f64;
        let mut feasible = true;
        for p in &points {
            let gap = p.estimate.ci_high - c1 * p.gauss;
            if gap <= 0.0 {
                continue;
            }
            if p.poly > 0.0 {
                need = need.max(gap / p.poly);
            } else {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let Some(&c2) = values.iter().find(|&&c| c >= need * (1.0 + 1e-12)) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((b1, b2)) => {
                let (cur, old) = (c1.ln() + c2.ln(), b1.ln() + b2.ln());
                cur < old - 1e-12 || ((cur - old).abs() <= 1e-12 && c2 < b2)
            }
        };
        if better {
            best = Some((c1, c2));
        }
    }
    let (c1, c2) = best.ok_or_else(|| {
        Error::NoConstants("the empirical tails exceed every bound on the grid".into())
    })?;
    finish(&mut points, c1, c2);
    Ok(FitResult {
        c1,
        c2,
        c1_relevant,
        points,
    })
}

/// Evaluates fixed constants on another grid; the flag is true when the
/// bound dominates the upper CI at every point.
pub fn validate_constants(
    process: &Process,
    model: &BoundModel,
    grid: &[(u64, f64)],
    replicates: u64,
    seed: u64,
    c1: f64,
    c2: f64,
) -> Result<(bool, Vec<GridPoint>)> {
    let mut points = estimate_grid(process, model, grid, replicates, seed)?;
    finish(&mut points, c1, c2);
    Ok((points.iter().all(GridPoint::dominated), points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::standard_grid;
    use crate::coefficients::{series_summary, CoefficientKind, TailModel, ThetaTable};
    use crate::processes::FiniteChain;

    #[test]
    fn search_box_endpoints() {
        let v = search_values();
        assert_eq!(v.len(), 181);
        assert_eq!(v[0], SEARCH_MIN);
        assert!((v[180] / SEARCH_MAX - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iid_constants_exist_and_transfer() {
        let process: Process = FiniteChain::flip(0.5).unwrap().into();
        let table = ThetaTable::new(
            vec![1.0, 0.0],
            TailModel::Zero,
            CoefficientKind::Theta { p: 4, q: 4 },
            1.0,
        )
        .unwrap();
        let model = BoundModel::new(1.0, series_summary(&table)).unwrap();
        let train = standard_grid(&[64, 256], 6, 1.0);
        let fit = fit_constants(&process, &model, &train, 2000, 11).unwrap();
        assert!(fit.c1_relevant);
        assert!(fit.points.iter().all(GridPoint::dominated));
        assert!(fit.binding().count() >= 1);
        let holdout = standard_grid(&[128], 6, 1.0);
        let (ok, _) =
            validate_constants(&process, &model, &holdout, 2000, 12, fit.c1, fit.c2).unwrap();
        assert!(ok);
    }
}
