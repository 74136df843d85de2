//! Dyadic-block Gaussian coupling.
//!
//! Indices `2^L + 1 ..= 2^{L+1}` form level `L`, cut into blocks of length
//! `2^{m(L)}`. Each block sum `U` is mapped through its exact conditional
//! law given the block-start state and the Gaussian quantile to
//! `V ~ N(0, σ² 2^m)` independent of the past; `V` is then split into i.i.d.
//! `N(0, σ²)` increments `Z_i`. `X_1` is paired with an independent
//! `Z_1 = σ Φ⁻¹(δ_1)`.

mod blocks;
mod schedule;
mod split;

pub use blocks::{
    block_sum_dist, conditional_quantile_gaussian, w2_conditional, BlockDist, BlockSumTable,
};
pub use schedule::{make_schedule, CouplingSchedule, ScheduleVariant};
pub use split::skorohod_split;

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::processes::{ChainWalker, FiniteChain, Process};
use crate::rng::{substream, StreamTag};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// One coupled block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub level: u32,
    /// 1-based block index within the level.
    pub index: usize,
    pub m: u32,
    pub start_state: usize,
    /// `S` at the block start.
    pub start_sum: f64,
    pub u: f64,
    pub v: f64,
    pub delta: f64,
}

/// Error statistics of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    pub m: u32,
    /// `sup_{ℓ≤2^L} |Σ_{i=2^L+1}^{2^L+ℓ} (X_i − Z_i)|`.
    pub d: f64,
    /// `sup_k |Σ_{j≤k} (U_j − V_j)|`.
    pub d1: f64,
    /// Largest within-block partial deviation.
    pub d2: f64,
}

/// Paired trajectories `(S_k, T_k)` for `k = 0..=n`, `n = 2^{N+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// `Z_1..Z_n` (index `k − 1`).
    pub z: Vec<f64>,
    /// `X_1..X_n` (index `k − 1`).
    pub x: Vec<f64>,
    pub blocks: Vec<BlockRecord>,
    pub levels: Vec<LevelStats>,
    pub sigma2: f64,
    pub seed: u64,
}

impl CoupledPath {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `max_{k≤n} |S_k − T_k|` for a prefix of length `n`.
    pub fn sup_error_up_to(&self, n: usize) -> f64 {
        self.s[..=n]
            .iter()
            .zip(&self.t[..=n])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_error(&self) -> f64 {
        self.sup_error_up_to(self.len())
    }

    /// `k,S_k,T_k` rows for `k = 0..=n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,S_k,T_k")?;
        for (k, (s, t)) in self.s.iter().zip(&self.t).enumerate() {
            writeln!(w, "{k},{s},{t}")?;
        }
        Ok(())
    }

    /// Per-level statistics keyed by level.
    pub fn levels_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, &LevelStats> = self
            .levels
            .iter()
            .map(|l| (l.level.to_string(), l))
            .collect();
        serde_json::to_value(map).expect("level stats serialize")
    }
}

/// Reusable coupling machinery for one chain, schedule and variance rate.
#[derive(Debug, Clone)]
pub struct Coupler<'a> {
    chain: &'a FiniteChain,
    schedule: CouplingSchedule,
    table: BlockSumTable,
    sigma2: f64,
}

impl<'a> Coupler<'a> {
    pub fn new(chain: &'a FiniteChain, schedule: CouplingSchedule, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::Degenerate(
                "coupling undefined for sigma2 = 0; use the degenerate pipeline".into(),
            ));
        }
        let table = BlockSumTable::new(chain, &schedule.m)?;
        Ok(Self {
            chain,
            schedule,
            table,
            sigma2,
        })
    }

    pub fn schedule(&self) -> &CouplingSchedule {
        &self.schedule
    }

    pub fn table(&self) -> &BlockSumTable {
        &self.table
    }

    pub fn path_len(&self) -> usize {
        self.schedule.path_len()
    }

    /// One coupled path; deterministic in `seed`.
    pub fn run(&self, seed: u64) -> Result<CoupledPath> {
        let n = self.path_len();
        let chain = self.chain;
        let lat = chain.lattice();
        let step = chain.step();
        let mut walker = ChainWalker::new(chain, seed);
        let mut states = Vec::with_capacity(n + 1);
        let mut units = Vec::with_capacity(n + 1);
        states.push(walker.state());
        units.push(0i64);
        for k in 0..n {
            let st = walker.step();
            states.push(st);
            units.push(units[k] + lat[st]);
        }
        let s: Vec<f64> = units.iter().map(|&u| u as f64 * step).collect();
        let x: Vec<f64> = states[1..]
            .iter()
            .map(|&st| lat[st] as f64 * step)
            .collect();

        let sigma = self.sigma2.sqrt();
        let mut z = vec![0.0; n];
        let mut t = vec![0.0; n + 1];
        let mut first = substream(seed, StreamTag::Block, 0);
        z[0] = sigma * {
            let d = open_uniform(&mut first);
            normal::clamped_quantile(d, 1.0 - d)
        };
        t[1] = z[0];
        let mut blocks = Vec::new();
        for (&level, &m) in self.schedule.levels.iter().zip(&self.schedule.m) {
            let base = 1usize << level;
            let len = 1usize << m;
            for k in 1..=(base >> m) {
                let b0 = base + (k - 1) * len;
                let start_state = states[b0];
                let dist = self
                    .table
                    .get(m, start_state)
                    .expect("table covers every scheduled exponent");
                let u_units = units[b0 + len] - units[b0];
                // Block indices stay below 2^41, under the level bits.
                let mut rng =
                    substream(seed, StreamTag::Block, (u64::from(level) << 42) | k as u64);
                let delta = open_uniform(&mut rng);
                let v = blocks::quantile_for_atom(dist, u_units, self.sigma2, m, delta)?;
                let tb = t[b0];
                if m == 0 {
                    z[b0] = v;
                } else {
                    let inc = skorohod_split(v, m, self.sigma2, &mut rng)?;
                    let mut acc = tb;
                    for (j, dz) in inc.iter().enumerate() {
                        z[b0 + j] = *dz;
                        acc += dz;
                        t[b0 + j + 1] = acc;
                    }
                }
                t[b0 + len] = tb + v;
                blocks.push(BlockRecord {
                    level,
                    index: k,
                    m,
                    start_state,
                    start_sum: s[b0],
                    u: u_units as f64 * step,
                    v,
                    delta,
                });
            }
        }
        let levels = level_stats(&self.schedule, &s, &t, &blocks);
        Ok(CoupledPath {
            s,
            t,
            z,
            x,
            blocks,
            levels,
            sigma2: self.sigma2,
            seed,
        })
    }

    /// Debug coupling with `T = S` (every error statistic is 0).
    pub fn run_identity(&self, seed: u64) -> Result<CoupledPath> {
        let mut path = self.run(seed)?;
        path.t = path.s.clone();
        path.z = path.x.clone();
        for b in &mut path.blocks {
            b.v = b.u;
        }
        path.levels = level_stats(&self.schedule, &path.s, &path.t, &path.blocks);
        Ok(path)
    }
}

/// Uniform on the open interval (0, 1).
fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn level_stats(
    schedule: &CouplingSchedule,
    s: &[f64],
    t: &[f64],
    blocks: &[BlockRecord],
) -> Vec<LevelStats> {
    let dev = |i: usize, from: usize| (s[i] - s[from]) - (t[i] - t[from]);
    let mut out = Vec::with_capacity(schedule.levels.len());
    let mut cursor = 0usize;
    for (&level, &m) in schedule.levels.iter().zip(&schedule.m) {
        let base = 1usize << level;
        let len = 1usize << m;
        let d = (1..=base)
            .map(|l| dev(base + l, base).abs())
            .fold(0.0, f64::max);
        let count = base >> m;
        let mut acc = 0.0f64;
        let mut d1 = 0.0f64;
        let mut d2 = 0.0f64;
        for b in &blocks[cursor..cursor + count] {
            acc += b.u - b.v;
            d1 = d1.max(acc.abs());
            let b0 = base + (b.index - 1) * len;
            for j in 1..=len {
                d2 = d2.max(dev(b0 + j, b0).abs());
            }
        }
        cursor += count;
        out.push(LevelStats {
            level,
            m,
            d,
            d1,
            d2,
        });
    }
    out
}

/// `sup_k |S_k − T_k|` and the per-level statistics, after checking the
/// pathwise decompositions `D_L ≤ D_{L,1} + D_{L,2}` and
/// `sup_k |S_k − T_k| ≤ |X_1 − Z_1| + Σ_L D_L`.
pub fn coupling_errors(path: &CoupledPath) -> Result<(f64, Vec<LevelStats>)> {
    let sup = path.sup_error();
    let scale = path
        .s
        .iter()
        .chain(&path.t)
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    for l in &path.levels {
        if l.d > l.d1 + l.d2 + tol {
            return Err(Error::InvariantViolated(format!(
                "level {}: D = {} exceeds D1 + D2 = {}",
                l.level,
                l.d,
                l.d1 + l.d2
            )));
        }
    }
    let envelope = (path.x[0] - path.z[0]).abs() + path.levels.iter().map(|l| l.d).sum::<f64>();
    if sup > envelope + tol {
        return Err(Error::InvariantViolated(format!(
            "sup error {sup} exceeds the level envelope {envelope}"
        )));
    }
    Ok((sup, path.levels.clone()))
}

/// One coupled path of `process` (a finite lattice chain) with
/// `n = 2^{N+1}` matching the schedule.
pub fn build_coupling(
    process: &Process,
    schedule: &CouplingSchedule,
    sigma2: f64,
    n: usize,
    seed: u64,
) -> Result<CoupledPath> {
    let chain = process
        .as_chain()
        .ok_or_else(|| Error::Unsupported("coupling needs an exact lattice chain".into()))?;
    if n != schedule.path_len() {
        return invalid(format!(
            "path length {n} differs from the schedule's 2^(N+1) = {}",
            schedule.path_len()
        ));
    }
    Coupler::new(chain, schedule.clone(), sigma2)?.run(seed)
}
