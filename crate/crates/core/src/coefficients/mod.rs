//! Dependence coefficients, the variance rate and the aggregate series the
//! tail bound consumes.

mod exact;
mod series;

pub use exact::{
    alpha_dep4_exact, alpha_inf4_exact, exponent_vectors, sigma2_exact, theta_exact, Sigma2,
    ThetaValue, DEFAULT_TUPLE_HORIZON,
};
pub use series::{degenerate_moment_bound, series_summary, SeriesSummary};

use crate::error::{invalid, Error, Result};
use crate::processes::FiniteChain;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

const MONOTONE_TOL: f64 = 1e-12;
const ZERO_TAIL_TOL: f64 = 1e-12;

/// Which coefficient a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "coefficient", rename_all = "snake_case")]
pub enum CoefficientKind {
    Theta { p: usize, q: usize },
    AlphaInf4,
    AlphaDep4,
}

/// Caller-declared behaviour of the coefficients beyond the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    Zero,
    /// `scale · rate^k`.
    Geometric {
        scale: f64,
        rate: f64,
    },
    /// `scale · k^{1-p}`.
    Polynomial {
        scale: f64,
        p: f64,
    },
}

impl TailModel {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Geometric { scale, rate } => scale * rate.powf(k),
            Self::Polynomial { scale, p } => scale * k.powf(1.0 - p),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::Geometric { scale, rate } if scale >= 0.0 && (0.0..1.0).contains(&rate) => Ok(()),
            Self::Polynomial { scale, p } if scale >= 0.0 && p > 1.0 => Ok(()),
            _ => invalid("tail model parameters out of range"),
        }
    }

    fn header(&self) -> String {
        match *self {
            Self::Zero => "tail=zero".into(),
            Self::Geometric { scale, rate } => format!("tail=geometric scale={scale} rate={rate}"),
            Self::Polynomial { scale, p } => format!("tail=polynomial scale={scale} p={p}"),
        }
    }
}

/// Nonincreasing coefficient sequence `θ(0..=K)` with a declared tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTable {
    values: Vec<f64>,
    tail: TailModel,
    kind: CoefficientKind,
    sup_norm: f64,
}

impl ThetaTable {
    /// Validates monotonicity, the `θ(0)` cap implied by `sup_norm`, and
    /// agreement (within a factor 2) between the tail model and `θ(K)`.
    pub fn new(
        values: Vec<f64>,
        tail: TailModel,
        kind: CoefficientKind,
        sup_norm: f64,
    ) -> Result<Self> {
        if values.is_empty() {
            return invalid("coefficient table is empty");
        }
        tail.validate()?;
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return invalid("coefficients must be finite and nonnegative");
        }
        if let Some(k) = values.windows(2).position(|w| w[1] > w[0] + MONOTONE_TOL) {
            return Err(Error::InvariantViolated(format!(
                "coefficients increase between k={k} and k={}",
                k + 1
            )));
        }
        let cap = match kind {
            CoefficientKind::Theta { p: _, q: 1 } => sup_norm,
            CoefficientKind::Theta { q, .. } => 2.0 * sup_norm.max(sup_norm.powi(q as i32)),
            CoefficientKind::AlphaInf4 => 0.25,
            CoefficientKind::AlphaDep4 => 1.0,
        };
        if values[0] > cap * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvariantViolated(format!(
                "coefficient at 0 is {} above its cap {cap}",
                values[0]
            )));
        }
        let k = values.len() - 1;
        let last = values[k];
        let consistent = match tail {
            TailModel::Zero => last <= ZERO_TAIL_TOL * values[0].max(1.0),
            _ => {
                let model = tail.eval(k as f64);
                (last == 0.0 && model == 0.0) || (model <= 2.0 * last && last <= 2.0 * model)
            }
        };
        if !consistent {
            return Err(Error::InvariantViolated(format!(
                "declared tail gives {} at k={k} but the table holds {last}",
                tail.eval(k as f64)
            )));
        }
        Ok(Self {
            values,
            tail,
            kind,
            sup_norm,
        })
    }

    /// Exact `θ_{X,p,q}(k)` for `k = 0..=horizon`. Truncated values are made
    /// nonincreasing by a suffix maximum, which stays below the untruncated
    /// coefficient since `θ(k) ≥ θ(j)` for `j ≥ k`.
    pub fn from_chain(
        chain: &FiniteChain,
        p: usize,
        q: usize,
        horizon: usize,
        tuple_horizon: usize,
        tail: TailModel,
    ) -> Result<Self> {
        let raw: Vec<f64> = (0..=horizon)
            .into_par_iter()
            .map(|k| theta_exact(chain, p, q, k, tuple_horizon).map(|t| t.value))
            .collect::<Result<_>>()?;
        let mut values = raw;
        for k in (0..horizon).rev() {
            values[k] = values[k].max(values[k + 1]);
        }
        Self::new(
            values,
            tail,
            CoefficientKind::Theta { p, q },
            chain.sup_norm(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest tabulated index `K`.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `θ(k)` from the table or the tail model.
    pub fn get(&self, k: usize) -> f64 {
        self.values
            .get(k)
            .copied()
            .unwrap_or_else(|| self.tail.eval(k as f64))
    }

    /// `k,value` rows after a `#` header carrying the tail model.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let kind = match self.kind {
            CoefficientKind::Theta { p, q } => format!("kind=theta p={p} q={q}"),
            CoefficientKind::AlphaInf4 => "kind=alpha_inf4".into(),
            CoefficientKind::AlphaDep4 => "kind=alpha_dep4".into(),
        };
        writeln!(
            w,
            "# {}; {kind}; sup_norm={}",
            self.tail.header(),
            self.sup_norm
        )?;
        writeln!(w, "k,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// Exact `θ_{Z,p,q}(k)` on the symmetrized product chain together with
/// `2^{q+1} θ_{X,p,q}(k)`.
pub fn symmetrization_check(
    chain: &FiniteChain,
    p: usize,
    q: usize,
    k: usize,
    tuple_horizon: usize,
) -> Result<(f64, f64)> {
    let z = chain.symmetrize()?;
    let theta_z = theta_exact(&z, p, q, k, tuple_horizon)?.value;
    let theta_x = theta_exact(chain, p, q, k, tuple_horizon)?.value;
    Ok((theta_z, 2f64.powi(q as i32 + 1) * theta_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn theta11() -> CoefficientKind {
        CoefficientKind::Theta { p: 1, q: 1 }
    }

    #[test]
    fn rejects_increasing_tables() {
        let e = ThetaTable::new(vec![0.5, 0.6, 0.0], TailModel::Zero, theta11(), 1.0);
        assert!(matches!(e, Err(Error::InvariantViolated(_))));
    }

    #[test]
    fn rejects_inconsistent_tail() {
        let e = ThetaTable::new(
            vec![1.0, 0.5, 0.25],
            TailModel::Geometric {
                scale: 1.0,
                rate: 0.1,
            },
            theta11(),
            1.0,
        );
        assert!(e.is_err());
        assert!(ThetaTable::new(vec![1.0, 0.5, 0.25], TailModel::Zero, theta11(), 1.0).is_err());
    }

    #[test]
    fn cap_follows_sup_norm() {
        assert!(ThetaTable::new(vec![1.5, 0.0], TailModel::Zero, theta11(), 1.0).is_err());
        assert!(ThetaTable::new(vec![1.5, 0.0], TailModel::Zero, theta11(), 2.0).is_ok());
    }

    #[test]
    fn flip_chain_table() {
        let c = FiniteChain::flip(0.25).unwrap();
        let t = ThetaTable::from_chain(
            &c,
            1,
            1,
            10,
            6,
            TailModel::Geometric {
                scale: 1.0,
                rate: 0.5,
            },
        )
        .unwrap();
        for k in 0..=10 {
            assert_relative_eq!(t.get(k), 0.5f64.powi(k as i32), epsilon = 1e-14);
        }
        assert_relative_eq!(t.get(30), 0.5f64.powi(30), max_relative = 1e-12);
    }

    #[test]
    fn csv_header_names_tail() {
        let t = ThetaTable::new(vec![1.0, 0.0], TailModel::Zero, theta11(), 1.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# tail=zero; kind=theta p=1 q=1; sup_norm=1\nk,value\n0,1\n1,0\n"
        );
    }

    #[test]
    fn symmetrization_on_iid() {
        let c = FiniteChain::flip(0.5).unwrap();
        let (z, b) = symmetrization_check(&c, 1, 1, 1, 6).unwrap();
        assert!(z < 1e-15 && b < 1e-15);
    }
}
