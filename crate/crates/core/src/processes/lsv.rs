use crate::error::{invalid, Result};
use crate::rng::{substream, StreamTag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BURN_IN: usize = 10_000;

/// One step of the LSV map `T(x) = x(1 + 2^γ x^γ)` on `[0, 1/2)`, `2x − 1`
/// on `[1/2, 1]`.
#[inline]
pub fn lsv_map(gamma: f64, x: f64) -> f64 {
    if x < 0.5 {
        x * (1.0 + gamma.exp2() * x.powf(gamma))
    } else {
        2.0 * x - 1.0
    }
}

/// Orbit `x0, T(x0), …, T^n(x0)` (length `n + 1`).
pub fn lsv_iterate(gamma: f64, x0: f64, n: usize) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid("gamma must lie in (0, 1)");
    }
    if !(0.0..=1.0).contains(&x0) {
        return invalid("x0 must lie in [0, 1]");
    }
    let two_g = gamma.exp2();
    let mut orbit = Vec::with_capacity(n + 1);
    let mut x = x0;
    orbit.push(x);
    for _ in 0..n {
        x = if x < 0.5 {
            x * (1.0 + two_g * x.powf(gamma))
        } else {
            2.0 * x - 1.0
        };
        orbit.push(x);
    }
    Ok(orbit)
}

/// Observable evaluated along LSV orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LsvObservable {
    Identity,
    /// `1{x ≤ threshold}`.
    Indicator {
        threshold: f64,
    },
    /// `x^exponent`, Hölder for `exponent ∈ (0, 1]`.
    Power {
        exponent: f64,
    },
}

impl LsvObservable {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Indicator { threshold } => {
                if x <= threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Power { exponent } => x.powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Identity => Ok(()),
            Self::Indicator { threshold } if (0.0..=1.0).contains(&threshold) => Ok(()),
            Self::Power { exponent } if exponent > 0.0 && exponent.is_finite() => Ok(()),
            _ => invalid("observable parameter out of range"),
        }
    }
}

/// Stationary-approximated LSV orbit process `X_k = f(T^k x) − center`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsvProcess {
    gamma: f64,
    observable: LsvObservable,
    burn_in: usize,
    center: f64,
}

impl LsvProcess {
    pub fn new(gamma: f64, observable: LsvObservable, burn_in: usize, center: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return invalid("gamma must lie in (0, 1)");
        }
        observable.validate()?;
        if !center.is_finite() {
            return invalid("center must be finite");
        }
        Ok(Self {
            gamma,
            observable,
            burn_in,
            center,
        })
    }

    /// Builds the process with `center` set to the Birkhoff average of the
    /// observable over a reference orbit of `reference_len` steps.
    pub fn with_estimated_center(
        gamma: f64,
        observable: LsvObservable,
        burn_in: usize,
        reference_len: usize,
        seed: u64,
    ) -> Result<Self> {
        let uncentered = Self::new(gamma, observable, burn_in, 0.0)?;
        if reference_len == 0 {
            return invalid("reference orbit must be nonempty");
        }
        let mut walker = LsvWalker::new(&uncentered, seed, StreamTag::Aux);
        let total: f64 = (0..reference_len).map(|_| walker.next_value()).sum();
        Self::new(gamma, observable, burn_in, total / reference_len as f64)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn observable(&self) -> LsvObservable {
        self.observable
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// `sup |f − center|` over `[0, 1]`; every supported observable is
    /// monotone, so the endpoints suffice.
    pub fn sup_norm(&self) -> f64 {
        let a = (self.observable.eval(0.0) - self.center).abs();
        let b = (self.observable.eval(1.0) - self.center).abs();
        a.max(b)
    }
}

pub(crate) struct LsvWalker<'a> {
    process: &'a LsvProcess,
    two_g: f64,
    rng: ChaCha8Rng,
    x: f64,
}

impl<'a> LsvWalker<'a> {
    pub(crate) fn new(process: &'a LsvProcess, seed: u64, tag: StreamTag) -> Self {
        let mut rng = substream(seed, tag, 0);
        let x = rng.random::<f64>();
        let mut w = Self {
            process,
            two_g: process.gamma.exp2(),
            rng,
            x,
        };
        for _ in 0..process.burn_in {
            w.advance();
        }
        w
    }

    #[inline]
    fn advance(&mut self) {
        let x = self.x;
        self.x = if x < 0.5 {
            x * (1.0 + self.two_g * x.powf(self.process.gamma))
        } else {
            2.0 * x - 1.0
        };
        // Doubling drops one mantissa bit per step; a run of right-branch
        // steps can land exactly on the fixed point 0, which real orbits
        // never reach. Restart from a fresh uniform in that case.
        if self.x == 0.0 {
            self.x = self.rng.random::<f64>();
        }
    }

    #[inline]
    pub(crate) fn next_value(&mut self) -> f64 {
        self.advance();
        self.process.observable.eval(self.x) - self.process.center
    }
}
