//! Exact conditional laws of block sums on finite lattice chains.
//!
//! Two independent routes are provided. [`block_sum_dist`] doubles the
//! block length, convolving `(sum, end state)` laws; it also yields the
//! end-state split. [`BlockSumTable`] runs the backward recursion
//! `G_{t+1}(s) = Σ_{s'} P(s,s') · (f(s') + G_t(s'))` for all start states at
//! once, which is much cheaper on large sparse chains. The coupling uses
//! the table; the doubling route serves as its cross-check.

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::processes::FiniteChain;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

const ATOM_BUDGET: u128 = 10_000_000;
const DOUBLING_OP_BUDGET: u128 = 20_000_000_000;

/// Law of a lattice-valued block sum given the block's start state.
///
/// Atoms are in lattice units, strictly increasing, with positive mass.
/// Left limits `P(U < u)` and right tails `P(U > u)` are accumulated from
/// opposite ends so both tails keep relative precision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDist {
    pub start_state: usize,
    pub m: u32,
    pub step: f64,
    atoms: Vec<i64>,
    probs: Vec<f64>,
    below: Vec<f64>,
    above: Vec<f64>,
    /// `end_split[i][e] = P(U = atoms[i], end state = e)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    end_split: Option<Vec<Vec<f64>>>,
}

impl BlockDist {
    /// Builds from a dense vector over `offset, offset + 1, …` (lattice
    /// units); zero entries are dropped.
    fn from_dense(
        start_state: usize,
        m: u32,
        step: f64,
        offset: i64,
        dense: &[f64],
        split: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let keep: Vec<usize> = (0..dense.len()).filter(|&i| dense[i] > 0.0).collect();
        let atoms = keep.iter().map(|&i| offset + i as i64).collect();
        let probs: Vec<f64> = keep.iter().map(|&i| dense[i]).collect();
        let end_split = split.map(|s| keep.iter().map(|&i| s[i].clone()).collect());
        let mut d = Self {
            start_state,
            m,
            step,
            atoms,
            probs,
            below: Vec::new(),
            above: Vec::new(),
            end_split,
        };
        d.accumulate();
        d
    }

    /// Arbitrary finite law on `step · Z` (lattice units `atoms`).
    pub fn from_atoms(atoms: &[i64], probs: &[f64], step: f64) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return invalid("atoms and probabilities must be nonempty and paired");
        }
        if atoms.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("atoms must be strictly increasing");
        }
        if probs.iter().any(|p| !(*p > 0.0)) {
            return invalid("atom probabilities must be positive");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}"));
        }
        let mut d = Self {
            start_state: 0,
            m: 0,
            step,
            atoms: atoms.to_vec(),
            probs: probs.to_vec(),
            below: Vec::new(),
            above: Vec::new(),
            end_split: None,
        };
        d.accumulate();
        Ok(d)
    }

    fn accumulate(&mut self) {
        let n = self.probs.len();
        self.below = vec![0.0; n];
        self.above = vec![0.0; n];
        for i in 1..n {
            self.below[i] = self.below[i - 1] + self.probs[i - 1];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            self.above[i] = self.above[i + 1] + self.probs[i + 1];
        }
    }

    /// Block length `2^m`.
    pub fn length(&self) -> usize {
        1 << self.m
    }

    pub fn atoms(&self) -> &[i64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn end_split(&self) -> Option<&[Vec<f64>]> {
        self.end_split.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean in observable units.
    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .map(|(&a, p)| a as f64 * p)
            .sum::<f64>()
            * self.step
    }

    /// Cumulative table `(value, P(U ≤ value))`.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .zip(self.below.iter().zip(&self.probs))
            .map(|(&a, (b, p))| (a as f64 * self.step, b + p))
            .collect()
    }

    /// `(P(U < u), P(U = u), P(U > u))` for a lattice point `u` (units)
    /// inside the support.
    fn masses_at(&self, u: i64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = (self.atoms[0], *self.atoms.last().expect("nonempty"));
        if u < lo || u > hi {
            return Err(Error::InvalidArgument(format!(
                "block sum {} outside the support [{}, {}]",
                u as f64 * self.step,
                lo as f64 * self.step,
                hi as f64 * self.step
            )));
        }
        Ok(match self.atoms.binary_search(&u) {
            Ok(i) => (self.below[i], self.probs[i], self.above[i]),
            Err(i) => (self.below[i], 0.0, self.above[i] + self.probs[i]),
        })
    }
}

fn observable_range(chain: &FiniteChain) -> (i64, i64) {
    let lat = chain.lattice();
    let lo = *lat.iter().min().expect("nonempty chain");
    let hi = *lat.iter().max().expect("nonempty chain");
    (lo, hi)
}

fn check_atoms(chain: &FiniteChain, m: u32) -> Result<()> {
    let (lo, hi) = observable_range(chain);
    let needed = (1u128 << m) * ((hi - lo) as u128 + 1);
    if m > 40 || needed > ATOM_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ATOM_BUDGET,
            advice: "use a smaller block exponent or a coarser lattice",
        });
    }
    Ok(())
}

/// Exact law of `(Σ_{i=1}^{2^m} X_i, end state)` given `X_0`'s state
/// `start_state`, by repeated doubling.
pub fn block_sum_dist(chain: &FiniteChain, start_state: usize, m: u32) -> Result<BlockDist> {
    let s = chain.n_states();
    if start_state >= s {
        return invalid("start state out of range");
    }
    check_atoms(chain, m)?;
    let (lo, hi) = observable_range(chain);
    let r = (hi - lo) as usize;
    let final_width = (r << m) + 1;
    let ops = (s as u128).pow(3) * (final_width as u128).pow(2);
    if ops > DOUBLING_OP_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: ops,
            budget: DOUBLING_OP_BUDGET,
            advice: "use BlockSumTable for large chains",
        });
    }
    let lat = chain.lattice();
    // d[s][v][e], v relative to offset (len << j) * lo.
    let mut width = r + 1;
    let mut d = vec![vec![vec![0.0; s]; width]; s];
    for (from, table) in d.iter_mut().enumerate() {
        for &(to, p) in chain.row(from) {
            table[(lat[to] - lo) as usize][to] += p;
        }
    }
    for _ in 0..m {
        let new_width = 2 * width - 1;
        let next: Vec<Vec<Vec<f64>>> = (0..s)
            .into_par_iter()
            .map(|from| {
                let mut out = vec![vec![0.0; s]; new_width];
                for v1 in 0..width {
                    for (mid, &a) in d[from][v1].iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        for v2 in 0..width {
                            let row = &d[mid][v2];
                            let target = &mut out[v1 + v2];
                            for e in 0..s {
                                target[e] += a * row[e];
                            }
                        }
                    }
                }
                out
            })
            .collect();
        d = next;
        width = new_width;
    }
    let table = &d[start_state];
    let dense: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let offset = lo << m;
    Ok(BlockDist::from_dense(
        start_state,
        m,
        chain.step(),
        offset,
        &dense,
        Some(table.clone()),
    ))
}

/// Block-sum laws for every start state at the requested exponents, shared
/// read-only across replicates.
#[derive(Debug, Clone)]
pub struct BlockSumTable {
    dists: BTreeMap<u32, Vec<BlockDist>>,
}

impl BlockSumTable {
    pub fn new(chain: &FiniteChain, exponents: &[u32]) -> Result<Self> {
        let mut wanted: Vec<u32> = exponents.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let Some(&top) = wanted.last() else {
            return invalid("no block exponents requested");
        };
        check_atoms(chain, top)?;
        let s = chain.n_states();
        let (lo, hi) = observable_range(chain);
        let r = (hi - lo) as usize;
        let lat = chain.lattice();
        let mut dists = BTreeMap::new();
        // g[s][v] = P(Σ_{i=1}^t X_i = t·lo + v | X_0 = s).
        let mut g: Vec<Vec<f64>> = vec![vec![1.0]; s];
        let mut width = 1usize;
        let mut t = 0usize;
        for &m in &wanted {
            let target = 1usize << m;
            while t < target {
                let new_width = width + r;
                g = (0..s)
                    .into_par_iter()
                    .map(|from| {
                        let mut out = vec![0.0; new_width];
                        for &(to, p) in chain.row(from) {
                            let shift = (lat[to] - lo) as usize;
                            for (o, &x) in out[shift..shift + width].iter_mut().zip(&g[to]) {
                                *o += p * x;
                            }
                        }
                        out
                    })
                    .collect();
                width = new_width;
                t += 1;
            }
            let offset = lo * t as i64;
            let row: Vec<BlockDist> = (0..s)
                .map(|from| BlockDist::from_dense(from, m, chain.step(), offset, &g[from], None))
                .collect();
            dists.insert(m, row);
        }
        Ok(Self { dists })
    }

    pub fn get(&self, m: u32, start_state: usize) -> Option<&BlockDist> {
        self.dists.get(&m).and_then(|row| row.get(start_state))
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> + '_ {
        self.dists.keys().copied()
    }
}

/// `V = σ 2^{m/2} Φ⁻¹(F(u−) + δ (F(u) − F(u−)))`, with the Gaussian argument
/// clamped to `±normal::Z_CLAMP`.
pub fn conditional_quantile_gaussian(
    u: f64,
    dist: &BlockDist,
    sigma2: f64,
    m: u32,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid("delta must lie in (0, 1)");
    }
    if !(sigma2 > 0.0) {
        return invalid("sigma2 must be positive");
    }
    let units = crate::lattice::snap(u, dist.step)?;
    let (below, at, above) = dist.masses_at(units)?;
    Ok(quantile_value(below, at, above, sigma2, m, delta))
}

#[inline]
pub(crate) fn quantile_value(
    below: f64,
    at: f64,
    above: f64,
    sigma2: f64,
    m: u32,
    delta: f64,
) -> f64 {
    let z = normal::clamped_quantile(below + delta * at, above + (1.0 - delta) * at);
    (sigma2 * (1u64 << m) as f64).sqrt() * z
}

pub(crate) fn quantile_for_atom(
    dist: &BlockDist,
    units: i64,
    sigma2: f64,
    m: u32,
    delta: f64,
) -> Result<f64> {
    let (below, at, above) = dist.masses_at(units)?;
    Ok(quantile_value(below, at, above, sigma2, m, delta))
}

/// `W₂²` between `dist` and `N(0, target_variance)`: the exact integral of
/// `(u − s Φ⁻¹(t))²` over each atom's cdf interval, using closed-form
/// Gaussian partial moments.
pub fn w2_conditional(dist: &BlockDist, target_variance: f64) -> f64 {
    let s = target_variance.sqrt();
    let mut total = 0.0;
    for i in 0..dist.atoms.len() {
        let u = dist.atoms[i] as f64 * dist.step;
        let p = dist.probs[i];
        let (b, a) = (dist.below[i], dist.above[i]);
        let za = if b <= a + p {
            normal::inv_cdf(b)
        } else {
            normal::inv_sf(a + p)
        };
        let zb = if b + p <= a {
            normal::inv_cdf(b + p)
        } else {
            normal::inv_sf(a)
        };
        let first = normal::pdf(za) - normal::pdf(zb);
        let zp = |z: f64| {
            if z.is_infinite() {
                0.0
            } else {
                z * normal::pdf(z)
            }
        };
        let second = p - (zp(zb) - zp(za));
        total += u * u * p - 2.0 * u * s * first + s * s * second;
    }
    total
}
