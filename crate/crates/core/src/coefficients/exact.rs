//! Exact dependence coefficients for finite chains.
//!
//! By the Markov property, conditioning on the whole past reduces to
//! conditioning on the time-0 state, and conditional expectations of
//! products along increasing times are matrix products
//! `P^{t_1} D_1 P^{t_2 - t_1} D_2 ⋯ 1` with diagonal observable factors.

use crate::error::{invalid, Error, Result};
use crate::processes::FiniteChain;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Default truncation of the index tuples: `k_p ≤ k + DEFAULT_TUPLE_HORIZON`.
pub const DEFAULT_TUPLE_HORIZON: usize = 12;

const TUPLE_BUDGET: u128 = 10_000_000;
const ALPHA_OP_BUDGET: u128 = 4_000_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Exponent vectors `(a_1, …, a_p)` with `a_1 ≥ 1`, `a_i ≥ 0`, `Σ a_i ≤ q`.
pub fn exponent_vectors(p: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(p: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        let lo = usize::from(cur.is_empty());
        for a in lo..=left {
            cur.push(a);
            rec(p, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p >= 1 && q >= 1 {
        rec(p, q, &mut Vec::with_capacity(p), &mut out);
    }
    out
}

struct Powers {
    mats: Vec<DMatrix<f64>>,
}

impl Powers {
    fn new(chain: &FiniteChain, max: usize) -> Self {
        let n = chain.n_states();
        let mut mats = Vec::with_capacity(max + 1);
        mats.push(DMatrix::identity(n, n));
        for d in 1..=max {
            let next = &mats[d - 1] * chain.transition();
            mats.push(next);
        }
        Self { mats }
    }
}

/// `Σ_s π(s) |h(s) − π·h|`.
fn l1_deviation(pi: &DVector<f64>, h: &DVector<f64>) -> f64 {
    let mean = pi.dot(h);
    pi.iter()
        .zip(h.iter())
        .map(|(p, x)| p * (x - mean).abs())
        .sum()
}

/// θ value together with the reported truncation indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: f64,
    /// `p · θ_{1,1}(horizon)`: size of the dependence left outside the
    /// truncated index window.
    pub truncation_bound: f64,
}

/// `θ_{X,p,q}(k)` with index tuples `k ≤ k_1 < ⋯ < k_p ≤ k + horizon`.
pub fn theta_exact(
    chain: &FiniteChain,
    p: usize,
    q: usize,
    k: usize,
    tuple_horizon: usize,
) -> Result<ThetaValue> {
    if p == 0 || q == 0 {
        return invalid("p and q must be positive");
    }
    let exps = exponent_vectors(p, q);
    let tuples = binomial(tuple_horizon as u128 + 1, p as u128);
    let needed = tuples.saturating_mul(exps.len() as u128);
    if needed > TUPLE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: TUPLE_BUDGET,
            advice: "reduce tuple_horizon, p or q",
        });
    }
    let top = k + tuple_horizon;
    let powers = Powers::new(chain, top);
    let f = DVector::from_vec(chain.observable());
    let fpow: Vec<DVector<f64>> = (0..=q).map(|e| f.map(|x| x.powi(e as i32))).collect();
    let pi = DVector::from_column_slice(chain.stationary());
    let ctx = Ctx {
        powers: &powers.mats,
        fpow: &fpow,
        pi: &pi,
        k,
        top,
    };
    let value = exps
        .par_iter()
        .map(|a| {
            let mut best = 0.0f64;
            ctx.descend(a, a.len() - 1, usize::MAX, None, &mut best);
            best
        })
        .reduce(|| 0.0, f64::max);
    // ‖P^j f‖_1 is nonincreasing in j, so this is θ_{1,1}(horizon).
    let tail_h = &powers.mats[tuple_horizon] * &f;
    Ok(ThetaValue {
        value,
        truncation_bound: p as f64 * l1_deviation(&pi, &tail_h),
    })
}

struct Ctx<'a> {
    powers: &'a [DMatrix<f64>],
    fpow: &'a [DVector<f64>],
    pi: &'a DVector<f64>,
    k: usize,
    top: usize,
}

impl Ctx<'_> {
    /// Places index `j` below `t_next` (the time of index `j + 1`), with
    /// `v_next` the conditional expectation of the later factors given the
    /// state at `t_next`.
    fn descend(
        &self,
        a: &[usize],
        j: usize,
        t_next: usize,
        v_next: Option<&DVector<f64>>,
        best: &mut f64,
    ) {
        let upper = if v_next.is_none() {
            self.top + 1
        } else {
            t_next
        };
        for t in (self.k + j)..upper {
            let w = match v_next {
                None => self.fpow[a[j]].clone(),
                Some(v) => self.fpow[a[j]].component_mul(&(&self.powers[t_next - t] * v)),
            };
            if j == 0 {
                let h = &self.powers[t] * &w;
                *best = best.max(l1_deviation(self.pi, &h));
            } else {
                self.descend(a, j - 1, t, Some(&w), best);
            }
        }
    }
}

/// `α_{∞,4}(k)`: strong mixing between the time-0 state and the states at
/// four times `k ≤ i_1 < ⋯ < i_4 ≤ k + horizon`.
///
/// Uses `α = ¼ sup_{|f|≤1} ‖E(f(Y) | F_0) − E f(Y)‖_1`. For fixed signs
/// `ε(s_0)` of the conditional deviation the optimal `f` is the sign of
/// each atom, so the sup is a max over `2^{S-1}` sign patterns of a sum over
/// the `S^4` atoms.
pub fn alpha_inf4_exact(chain: &FiniteChain, k: usize, tuple_horizon: usize) -> Result<f64> {
    let s = chain.n_states();
    if s > 16 {
        return Err(Error::BudgetExceeded {
            needed: s as u128,
            budget: 16,
            advice: "alpha enumeration needs a small state space",
        });
    }
    let tuples = binomial(tuple_horizon as u128 + 1, 4);
    let atoms = (s as u128).pow(4);
    let needed = tuples * (1u128 << (s - 1)) * atoms * s as u128;
    if needed > ALPHA_OP_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ALPHA_OP_BUDGET,
            advice: "reduce tuple_horizon",
        });
    }
    let top = k + tuple_horizon;
    let powers = Powers::new(chain, top).mats;
    let pi = chain.stationary();
    let mut tuples = Vec::new();
    for i1 in k..=top {
        for i2 in i1 + 1..=top {
            for i3 in i2 + 1..=top {
                for i4 in i3 + 1..=top {
                    tuples.push([i1, i2, i3, i4]);
                }
            }
        }
    }
    let value = tuples
        .par_iter()
        .map(|&[i1, i2, i3, i4]| {
            let (p1, p2, p3, p4) = (
                &powers[i1],
                &powers[i2 - i1],
                &powers[i3 - i2],
                &powers[i4 - i3],
            );
            // dev[s0][y] = π(s0)(P(Y = y | s0) − P(Y = y)), y flattened.
            let mut joint = vec![vec![0.0; s * s * s * s]; s];
            for (s0, row) in joint.iter_mut().enumerate() {
                for y1 in 0..s {
                    let a = p1[(s0, y1)];
                    for y2 in 0..s {
                        let b = a * p2[(y1, y2)];
                        for y3 in 0..s {
                            let c = b * p3[(y2, y3)];
                            for y4 in 0..s {
                                row[((y1 * s + y2) * s + y3) * s + y4] = c * p4[(y3, y4)];
                            }
                        }
                    }
                }
            }
            let n_atoms = s * s * s * s;
            let marginal: Vec<f64> = (0..n_atoms)
                .map(|y| (0..s).map(|s0| pi[s0] * joint[s0][y]).sum())
                .collect();
            for (s0, row) in joint.iter_mut().enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    *v = pi[s0] * (*v - marginal[y]);
                }
            }
            let mut best = 0.0f64;
            for mask in 0..(1usize << (s - 1)) {
                let total: f64 = (0..n_atoms)
                    .map(|y| {
                        (0..s)
                            .map(|s0| {
                                if s0 > 0 && mask >> (s0 - 1) & 1 == 1 {
                                    -joint[s0][y]
                                } else {
                                    joint[s0][y]
                                }
                            })
                            .sum::<f64>()
                            .abs()
                    })
                    .sum();
                best = best.max(total);
            }
            0.25 * best
        })
        .reduce(|| 0.0, f64::max);
    Ok(value)
}

/// `α_{Y,4}(k)` for `Y_i` the observable: products of centered indicators
/// `1{Y ≤ x_j} − P(Y ≤ x_j)` over `l ≤ 4` nondecreasing times
/// `k ≤ i_1 ≤ ⋯ ≤ i_l ≤ k + horizon`. Thresholds range over the observable's
/// distinct values (other thresholds give constant indicators).
pub fn alpha_dep4_exact(chain: &FiniteChain, k: usize, tuple_horizon: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let obs = chain.lattice();
    let mut levels: Vec<i64> = obs.to_vec();
    levels.sort_unstable();
    levels.dedup();
    levels.pop();
    let pi = DVector::from_column_slice(chain.stationary());
    let indicators: Vec<DVector<f64>> = levels
        .iter()
        .map(|&x| {
            let ind = DVector::from_iterator(obs.len(), obs.iter().map(|&v| f64::from(v <= x)));
            let m = pi.dot(&ind);
            ind.add_scalar(-m)
        })
        .collect();
    if indicators.is_empty() {
        return Ok(0.0);
    }
    let t = indicators.len() as u128;
    let needed: u128 = (1..=4u128)
        .map(|l| binomial(tuple_horizon as u128 + l, l) * t.pow(l as u32))
        .sum();
    if needed > TUPLE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: TUPLE_BUDGET,
            advice: "reduce tuple_horizon",
        });
    }
    let top = k + tuple_horizon;
    let powers = Powers::new(chain, top).mats;
    let mut best = 0.0f64;
    // Build products from the last factor backwards.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        powers: &[DMatrix<f64>],
        ind: &[DVector<f64>],
        pi: &DVector<f64>,
        k: usize,
        left: usize,
        t_next: usize,
        v: &DVector<f64>,
        best: &mut f64,
    ) {
        // Close the product here: condition on time 0.
        let h = &powers[t_next] * v;
        *best = best.max(l1_deviation(pi, &h));
        if left == 0 {
            return;
        }
        for t in k..=t_next {
            let moved = &powers[t_next - t] * v;
            for g in ind {
                let w = g.component_mul(&moved);
                rec(powers, ind, pi, k, left - 1, t, &w, best);
            }
        }
    }
    for t in k..=top {
        for g in &indicators {
            rec(&powers, &indicators, &pi, k, 3, t, g, &mut best);
        }
    }
    Ok(best)
}

/// Variance rate with a certified enclosure `[value − radius, value + radius]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2 {
    pub value: f64,
    pub radius: f64,
    /// Number of covariance terms summed.
    pub terms: usize,
}

/// Dobrushin coefficient `max_{s,t} ½ Σ_u |P(s,u) − P(t,u)|`.
fn dobrushin(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for s in 0..n {
        for t in s + 1..n {
            let d: f64 = (0..n).map(|u| (m[(s, u)] - m[(t, u)]).abs()).sum();
            worst = worst.max(0.5 * d);
        }
    }
    worst
}

const SIGMA2_TOL: f64 = 1e-10;
const SIGMA2_MAX_TERMS: usize = 50_000_000;

/// `σ² = E X_0² + 2 Σ_{k≥1} E X_0 X_k`.
///
/// After `J` terms the remainder is bounded through the contraction of
/// oscillations: with `δ̄ = δ(P^K) < 1`,
/// `Σ_{j>J} |E X_0 X_j| ≤ ‖f‖_∞ · K · osc(P^J f) / (1 − δ̄)`.
pub fn sigma2_exact(chain: &FiniteChain) -> Result<Sigma2> {
    let f = chain.observable();
    let sup = chain.sup_norm();
    if sup == 0.0 {
        return Ok(Sigma2 {
            value: 0.0,
            radius: 0.0,
            terms: 0,
        });
    }
    // Smallest dyadic K with δ(P^K) ≤ ½ (or the best found within 2^40).
    let mut pk = chain.transition().clone();
    let mut k = 1usize;
    let mut delta = dobrushin(&pk);
    while delta > 0.5 && k < (1 << 40) {
        pk = &pk * &pk;
        k *= 2;
        delta = dobrushin(&pk);
    }
    if delta >= 1.0 - 1e-12 {
        return Err(Error::NoSpectralGap);
    }
    let pi = chain.stationary();
    let weighted: Vec<f64> = pi.iter().zip(&f).map(|(p, x)| p * x).collect();
    let dot = |g: &[f64]| -> f64 { weighted.iter().zip(g).map(|(a, b)| a * b).sum() };
    let factor = 2.0 * sup * k as f64 / (1.0 - delta);
    let tol = SIGMA2_TOL * sup.max(1.0).powi(2);
    let mut g = f.clone();
    let mut value = dot(&g);
    let mut terms = 0usize;
    loop {
        g = chain.apply(&g);
        terms += 1;
        value += 2.0 * dot(&g);
        let (lo, hi) = g
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let radius = factor * (hi - lo);
        if radius <= tol || terms >= SIGMA2_MAX_TERMS {
            return Ok(Sigma2 {
                value,
                radius,
                terms,
            });
        }
    }
}
