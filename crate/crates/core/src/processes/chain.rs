use crate::error::{invalid, Error, Result};
use crate::lattice::{self, MAX_DENOMINATOR};
use nalgebra::DMatrix;

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const CENTER_TOL: f64 = 1e-10;

/// Stationary finite-state Markov chain with a centered lattice observable.
///
/// The observable at state `s` is `lattice[s] * step`. The chain is immutable
/// once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    states: Vec<String>,
    transition: DMatrix<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    cumulative: Vec<Vec<(usize, f64)>>,
    stationary: Vec<f64>,
    stationary_cum: Vec<f64>,
    lattice: Vec<i64>,
    step: f64,
    sup_norm: f64,
}

fn validate_rows(transition: &[Vec<f64>]) -> Result<usize> {
    let n = transition.len();
    if n == 0 {
        return invalid("transition matrix is empty");
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotStochastic {
                row: i,
                reason: format!("row has {} entries, expected {n}", row.len()),
            });
        }
        if let Some(&bad) = row.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::NotStochastic {
                row: i,
                reason: format!("entry {bad} is negative or not finite"),
            });
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::NotStochastic {
                row: i,
                reason: format!("row sums to {s}"),
            });
        }
    }
    Ok(n)
}

/// Normalized left fixed vector of `p`, or an error when it is not unique.
fn solve_stationary(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let lu = a.full_piv_lu();
    let diag = lu.u().diagonal();
    let max = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::NonUniqueStationary);
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = lu.solve(&rhs).ok_or(Error::NonUniqueStationary)?;
    let mut pi: Vec<f64> = sol.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    // A few power steps remove the solve's rounding noise.
    for _ in 0..3 {
        let next = left_mul(p, &pi);
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|x| x / total).collect();
    }
    Ok(pi)
}

fn left_mul(p: &DMatrix<f64>, mu: &[f64]) -> Vec<f64> {
    let n = p.nrows();
    let mut out = vec![0.0; n];
    for (i, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += m * p[(i, j)];
        }
    }
    out
}

impl FiniteChain {
    /// Builds a chain from row-stochastic `transition`, raw observable values
    /// on the lattice `step * Z`, and optional state labels.
    ///
    /// The stationary law is the normalized left fixed vector. The observable
    /// is recentered by its stationary mean; when the mean is not a lattice
    /// point, the lattice is refined to `step / den` where `num/den` is the
    /// rational value of the mean in lattice units.
    pub fn new(transition: Vec<Vec<f64>>, observable_raw: &[f64], step: f64) -> Result<Self> {
        let n = validate_rows(&transition)?;
        if observable_raw.len() != n {
            return invalid(format!(
                "observable has {} values for {n} states",
                observable_raw.len()
            ));
        }
        if !(step > 0.0) || !step.is_finite() {
            return invalid("lattice step must be positive");
        }
        let ints = lattice::snap_all(observable_raw, step)?;
        let p = DMatrix::from_fn(n, n, |i, j| transition[i][j]);
        let pi = solve_stationary(&p)?;
        let (ints, step) = center_on_lattice(&pi, ints, step)?;
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        Self::from_parts(labels, p, pi, ints, step)
    }

    /// Assembles a chain whose stationary law is already known; all
    /// invariants are re-checked.
    pub(crate) fn from_parts(
        states: Vec<String>,
        transition: DMatrix<f64>,
        stationary: Vec<f64>,
        lattice: Vec<i64>,
        step: f64,
    ) -> Result<Self> {
        let n = transition.nrows();
        if transition.ncols() != n
            || stationary.len() != n
            || lattice.len() != n
            || states.len() != n
        {
            return invalid("inconsistent chain dimensions");
        }
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| transition[(i, j)] > 0.0)
                    .map(|j| (j, transition[(i, j)]))
                    .collect()
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > ROW_TOL || (0..n).any(|j| transition[(i, j)] < 0.0) {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("row sums to {s}"),
                });
            }
        }
        let cumulative = rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|&(j, p)| {
                        acc += p;
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        let mut acc = 0.0;
        let stationary_cum = stationary
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let sup_norm = lattice.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64 * step;
        let chain = Self {
            states,
            transition,
            rows,
            cumulative,
            stationary,
            stationary_cum,
            lattice,
            step,
            sup_norm,
        };
        chain.check_invariants()?;
        Ok(chain)
    }

    fn check_invariants(&self) -> Result<()> {
        let pi_p = left_mul(&self.transition, &self.stationary);
        let drift = pi_p
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift > STATIONARY_TOL {
            return Err(Error::InvariantViolated(format!(
                "stationary vector drifts by {drift:e} under the transition"
            )));
        }
        let mean: f64 = self
            .stationary
            .iter()
            .zip(&self.lattice)
            .map(|(p, &v)| p * v as f64 * self.step)
            .sum();
        if mean.abs() > CENTER_TOL * self.sup_norm.max(1.0) {
            return Err(Error::InvariantViolated(format!(
                "observable not centered: stationary mean {mean:e}"
            )));
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_states() {
            return invalid("label count differs from state count");
        }
        self.states = labels;
        Ok(self)
    }

    /// Two-state chain that flips state with probability `flip`, observable ±1.
    pub fn flip(flip: f64) -> Result<Self> {
        if !(flip > 0.0 && flip <= 1.0) {
            return invalid("flip probability must lie in (0, 1]");
        }
        Self::new(
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
            &[1.0, -1.0],
            1.0,
        )?
        .with_labels(vec!["+".into(), "-".into()])
    }

    pub fn n_states(&self) -> usize {
        self.stationary.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    /// Nonzero entries `(column, probability)` of row `s`.
    pub fn row(&self, s: usize) -> &[(usize, f64)] {
        &self.rows[s]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Observable in lattice units.
    pub fn lattice(&self) -> &[i64] {
        &self.lattice
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Observable values `lattice * step`.
    pub fn observable(&self) -> Vec<f64> {
        self.lattice.iter().map(|&v| v as f64 * self.step).collect()
    }

    /// `(P v)(s) = Σ_t P(s,t) v(t)`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, p)| p * v[j]).sum())
            .collect()
    }

    /// `(μ P)(t) = Σ_s μ(s) P(s,t)`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states()];
        for (row, &m) in self.rows.iter().zip(mu) {
            if m != 0.0 {
                for &(j, p) in row {
                    out[j] += m * p;
                }
            }
        }
        out
    }

    /// Expectation under the stationary law.
    pub fn stationary_mean(&self, v: &[f64]) -> f64 {
        self.stationary.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Same chain with the observable divided by its sup norm (lattice
    /// integers unchanged, step rescaled).
    pub fn normalize(&self) -> Self {
        if self.sup_norm == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.step = self.step / self.sup_norm;
        out.sup_norm = out
            .lattice
            .iter()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0) as f64
            * out.step;
        out
    }

    pub(crate) fn sample_initial(&self, u: f64) -> usize {
        let idx = self.stationary_cum.partition_point(|&c| c <= u);
        idx.min(self.n_states() - 1)
    }

    pub(crate) fn sample_next(&self, s: usize, u: f64) -> usize {
        let row = &self.cumulative[s];
        let idx = row.partition_point(|&(_, c)| c <= u);
        row[idx.min(row.len() - 1)].0
    }

    /// Exact product chain of `(X_i, X'_i)` with independent copies, carrying
    /// the observable `Z_i = X_i − X'_i`.
    pub fn symmetrize(&self) -> Result<Self> {
        let n = self.n_states();
        let m = n * n;
        let p = DMatrix::from_fn(m, m, |a, b| {
            self.transition[(a / n, b / n)] * self.transition[(a % n, b % n)]
        });
        let pi = (0..m)
            .map(|a| self.stationary[a / n] * self.stationary[a % n])
            .collect();
        let ints = (0..m)
            .map(|a| self.lattice[a / n] - self.lattice[a % n])
            .collect();
        let labels = (0..m)
            .map(|a| format!("({},{})", self.states[a / n], self.states[a % n]))
            .collect();
        Self::from_parts(labels, p, pi, ints, self.step)
    }

    /// Degenerate observable built from `g`: the chain is lifted to its edge
    /// chain `(s_{i-1}, s_i)` and carries `g(s_i) − g(s_{i-1})`, so partial
    /// sums telescope to `g(s_n) − g(s_0)`.
    pub fn make_coboundary(&self, g_values: &[f64]) -> Result<Self> {
        let n = self.n_states();
        if g_values.len() != n {
            return invalid("g must have one value per state");
        }
        let g = lattice::snap_all(g_values, self.step)?;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|s| self.rows[s].iter().map(move |&(t, _)| (s, t)))
            .collect();
        let index = |s: usize, t: usize| edges.binary_search(&(s, t)).ok();
        let m = edges.len();
        let mut p = DMatrix::zeros(m, m);
        for (a, &(_, t)) in edges.iter().enumerate() {
            for &(u, q) in &self.rows[t] {
                let b = index(t, u).expect("edge list covers all support");
                p[(a, b)] = q;
            }
        }
        let pi = edges
            .iter()
            .map(|&(s, t)| self.stationary[s] * self.transition[(s, t)])
            .collect();
        let ints = edges.iter().map(|&(s, t)| g[t] - g[s]).collect();
        let labels = edges
            .iter()
            .map(|&(s, t)| format!("{}->{}", self.states[s], self.states[t]))
            .collect();
        Self::from_parts(labels, p, pi, ints, self.step)
    }
}

/// Intermittent renewal chain used as a finite-state stand-in for the LSV
/// map: from a hub state the chain starts a laminar excursion of length `j`
/// (probability ∝ j^{-p} − (j+1)^{-p}, `p = 1/gamma`, `j ≤ max_excursion`),
/// with sign ± chosen fairly; the observable is the excursion sign and 0 at
/// the hub. Return-time tails are ≍ k^{-p}, so dependence decays like k^{1-p}
/// up to the truncation.
pub fn intermittent_surrogate(gamma: f64, max_excursion: usize) -> Result<FiniteChain> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid("gamma must lie in (0, 1)");
    }
    if max_excursion < 2 {
        return invalid("max_excursion must be at least 2");
    }
    let p = 1.0 / gamma;
    let k = max_excursion;
    let weights: Vec<f64> = (1..=k)
        .map(|j| (j as f64).powf(-p) - ((j + 1) as f64).powf(-p))
        .collect();
    let total: f64 = weights.iter().sum();
    let n = 2 * k + 1;
    let plus = |j: usize| j;
    let minus = |j: usize| k + j;
    let mut t = vec![vec![0.0; n]; n];
    for j in 1..=k {
        t[0][plus(j)] = 0.5 * weights[j - 1] / total;
        t[0][minus(j)] = 0.5 * weights[j - 1] / total;
        t[plus(j)][if j == 1 { 0 } else { plus(j - 1) }] = 1.0;
        t[minus(j)][if j == 1 { 0 } else { minus(j - 1) }] = 1.0;
    }
    // Row 0 may miss 1 by rounding; fold the residue into the shortest excursions.
    let residue = 1.0 - t[0].iter().sum::<f64>();
    t[0][plus(1)] += 0.5 * residue;
    t[0][minus(1)] += 0.5 * residue;
    let mut obs = vec![0.0; n];
    for j in 1..=k {
        obs[plus(j)] = 1.0;
        obs[minus(j)] = -1.0;
    }
    let mut labels = vec!["hub".to_string()];
    labels.extend((1..=k).map(|j| format!("+{j}")));
    labels.extend((1..=k).map(|j| format!("-{j}")));
    FiniteChain::new(t, &obs, 1.0)?.with_labels(labels)
}

/// Recenters lattice values by their stationary mean, refining the lattice
/// when the mean is a non-integer rational.
fn center_on_lattice(pi: &[f64], ints: Vec<i64>, step: f64) -> Result<(Vec<i64>, f64)> {
    let mean: f64 = pi.iter().zip(&ints).map(|(p, &v)| p * v as f64).sum();
    let scale = ints
        .iter()
        .map(|v| v.unsigned_abs())
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    if mean.abs() <= 1e-12 * scale {
        return Ok((ints, step));
    }
    let (num, den) =
        lattice::rational_approx(mean, MAX_DENOMINATOR, 1e-9 * scale).ok_or_else(|| {
            Error::InvariantViolated(format!(
                "stationary mean {mean} is not a rational lattice shift"
            ))
        })?;
    let shifted: Vec<i64> = ints.iter().map(|&v| v * den - num).collect();
    let g = lattice::gcd_all(&shifted).max(1);
    Ok((
        shifted.iter().map(|v| v / g).collect(),
        step * g as f64 / den as f64,
    ))
}
