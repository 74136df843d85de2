//! Stationary bounded dependent sequences and seeded sampling.

mod chain;
mod lsv;
mod spec;

pub use chain::{intermittent_surrogate, FiniteChain};
pub use lsv::{lsv_iterate, lsv_map, LsvObservable, LsvProcess, DEFAULT_BURN_IN};
pub use spec::ProcessSpec;

use crate::error::{invalid, Result};
use crate::rng::{substream, StreamTag};
use lsv::LsvWalker;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;

/// A sampleable stationary process.
#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    Chain(Arc<FiniteChain>),
    Lsv(LsvProcess),
    /// `X_i − X'_i` with `X'` an independent copy of the inner process.
    Symmetrized(Box<Process>),
}

impl From<FiniteChain> for Process {
    fn from(chain: FiniteChain) -> Self {
        Self::Chain(Arc::new(chain))
    }
}

impl From<LsvProcess> for Process {
    fn from(p: LsvProcess) -> Self {
        Self::Lsv(p)
    }
}

impl Process {
    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Chain(c) => c.sup_norm(),
            Self::Lsv(p) => p.sup_norm(),
            Self::Symmetrized(inner) => 2.0 * inner.sup_norm(),
        }
    }

    pub fn as_chain(&self) -> Option<&FiniteChain> {
        match self {
            Self::Chain(c) => Some(c),
            _ => None,
        }
    }

    /// Short identifier recorded on sample paths.
    pub fn id(&self) -> String {
        match self {
            Self::Chain(c) => format!("chain[{}]", c.n_states()),
            Self::Lsv(p) => format!("lsv[gamma={}]", p.gamma()),
            Self::Symmetrized(inner) => format!("sym({})", inner.id()),
        }
    }

    /// Observable divided by its sup norm.
    pub fn normalize(&self) -> Result<Self> {
        match self {
            Self::Chain(c) => Ok(c.normalize().into()),
            _ => invalid("normalization is implemented for finite chains only"),
        }
    }

    /// Process of `X_i − X'_i`. Finite chains get the exact product chain.
    pub fn symmetrize(&self) -> Result<Self> {
        match self {
            Self::Chain(c) => Ok(c.symmetrize()?.into()),
            other => Ok(Self::Symmetrized(Box::new(other.clone()))),
        }
    }

    fn walker(&self, seed: u64, tag: StreamTag) -> Walker<'_> {
        match self {
            Self::Chain(c) => Walker::Chain(ChainWalker::with_tag(c, seed, tag)),
            Self::Lsv(p) => Walker::Lsv(LsvWalker::new(p, seed, tag)),
            Self::Symmetrized(inner) => Walker::Sym(
                Box::new(inner.walker(seed, tag)),
                Box::new(inner.walker(seed, StreamTag::Copy)),
            ),
        }
    }
}

/// Seeded stationary walk on a finite chain.
pub struct ChainWalker<'a> {
    chain: &'a FiniteChain,
    rng: ChaCha8Rng,
    state: usize,
}

impl<'a> ChainWalker<'a> {
    /// Draws the time-0 state from the stationary law of `chain`.
    pub fn new(chain: &'a FiniteChain, seed: u64) -> Self {
        Self::with_tag(chain, seed, StreamTag::Path)
    }

    fn with_tag(chain: &'a FiniteChain, seed: u64, tag: StreamTag) -> Self {
        let mut rng = substream(seed, tag, 0);
        let state = chain.sample_initial(rng.random::<f64>());
        Self { chain, rng, state }
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// Moves one step and returns the new state.
    #[inline]
    pub fn step(&mut self) -> usize {
        self.state = self.chain.sample_next(self.state, self.rng.random::<f64>());
        self.state
    }
}

enum Walker<'a> {
    Chain(ChainWalker<'a>),
    Lsv(LsvWalker<'a>),
    Sym(Box<Walker<'a>>, Box<Walker<'a>>),
}

impl Walker<'_> {
    fn next_value(&mut self) -> f64 {
        match self {
            Self::Chain(w) => {
                let s = w.step();
                w.chain.lattice()[s] as f64 * w.chain.step()
            }
            Self::Lsv(w) => w.next_value(),
            Self::Sym(a, b) => a.next_value() - b.next_value(),
        }
    }
}

/// One realization `X_1..X_n` with its partial sums and running maxima.
///
/// Index `k` of the sum and max vectors refers to time `k`, so
/// `partial_sums[0] = 0` and `values[k - 1] = X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `max_{j≤k} S_j`.
    pub running_max: Vec<f64>,
    /// `max_{j≤k} |S_j|`.
    pub running_abs_max: Vec<f64>,
    /// Chain states `s_0..s_n`, when the process is a finite chain.
    pub states: Option<Vec<usize>>,
    pub seed: u64,
    pub process_id: String,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `index,value,partial_sum` rows for `k = 1..n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,value,partial_sum")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, v, self.partial_sums[k + 1])?;
        }
        Ok(())
    }
}

/// Draws a path of length `n`. Chains accumulate sums in lattice units so
/// the partial sums carry no rounding drift.
pub fn sample_path(process: &Process, n: usize, seed: u64) -> Result<SamplePath> {
    if n == 0 {
        return invalid("path length must be at least 1");
    }
    let mut values = Vec::with_capacity(n);
    let mut partial_sums = Vec::with_capacity(n + 1);
    partial_sums.push(0.0);
    let mut states = None;
    match process {
        Process::Chain(chain) => {
            let mut w = ChainWalker::new(chain, seed);
            let mut st = Vec::with_capacity(n + 1);
            st.push(w.state());
            let (lat, step) = (chain.lattice(), chain.step());
            let mut units = 0i64;
            for _ in 0..n {
                let s = w.step();
                st.push(s);
                units += lat[s];
                values.push(lat[s] as f64 * step);
                partial_sums.push(units as f64 * step);
            }
            states = Some(st);
        }
        _ => {
            let mut w = process.walker(seed, StreamTag::Path);
            let mut acc = 0.0;
            for _ in 0..n {
                let v = w.next_value();
                acc += v;
                values.push(v);
                partial_sums.push(acc);
            }
        }
    }
    let mut running_max = Vec::with_capacity(n + 1);
    let mut running_abs_max = Vec::with_capacity(n + 1);
    let (mut m, mut a) = (0.0f64, 0.0f64);
    for &s in &partial_sums {
        m = m.max(s);
        a = a.max(s.abs());
        running_max.push(m);
        running_abs_max.push(a);
    }
    Ok(SamplePath {
        values,
        partial_sums,
        running_max,
        running_abs_max,
        states,
        seed,
        process_id: process.id(),
    })
}

/// Summary of one path used by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathExtremes {
    /// `max_{0≤k≤n} S_k`.
    pub max: f64,
    /// `max_{0≤k≤n} |S_k|`.
    pub abs_max: f64,
    /// `S_n`.
    pub last: f64,
}

/// Same statistics as [`sample_path`] with the same seed, without storing
/// the path.
pub fn path_extremes(process: &Process, n: usize, seed: u64) -> Result<PathExtremes> {
    if n == 0 {
        return invalid("path length must be at least 1");
    }
    match process {
        Process::Chain(chain) => {
            let mut w = ChainWalker::new(chain, seed);
            let lat = chain.lattice();
            let (mut s, mut hi, mut lo) = (0i64, 0i64, 0i64);
            for _ in 0..n {
                s += lat[w.step()];
                hi = hi.max(s);
                lo = lo.min(s);
            }
            let step = chain.step();
            Ok(PathExtremes {
                max: hi as f64 * step,
                abs_max: hi.max(-lo) as f64 * step,
                last: s as f64 * step,
            })
        }
        _ => {
            let mut w = process.walker(seed, StreamTag::Path);
            let (mut s, mut hi, mut abs) = (0.0f64, 0.0f64, 0.0f64);
            for _ in 0..n {
                s += w.next_value();
                hi = hi.max(s);
                abs = abs.max(s.abs());
            }
            Ok(PathExtremes {
                max: hi,
                abs_max: abs,
                last: s,
            })
        }
    }
}
