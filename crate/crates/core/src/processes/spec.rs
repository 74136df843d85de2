use super::{intermittent_surrogate, FiniteChain, LsvObservable, LsvProcess, Process};
use crate::error::Result;
use serde::{Deserialize, Serialize};

fn default_excursion() -> usize {
    256
}

fn default_burn_in() -> usize {
    super::DEFAULT_BURN_IN
}

fn default_reference_len() -> usize {
    1_000_000
}

/// Human-editable process description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    Chain {
        transition: Vec<Vec<f64>>,
        observable: Vec<f64>,
        step: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    /// Two states, flip probability `flip`, observable ±1.
    FlipChain {
        flip: f64,
    },
    /// Finite renewal chain with LSV-like polynomial return tails.
    Surrogate {
        gamma: f64,
        #[serde(default = "default_excursion")]
        max_excursion: usize,
    },
    Coboundary {
        base: Box<ProcessSpec>,
        g: Vec<f64>,
    },
    Lsv {
        gamma: f64,
        observable: LsvObservable,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        /// Centering constant; estimated from a reference orbit when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
        #[serde(default = "default_reference_len")]
        reference_len: usize,
        #[serde(default)]
        reference_seed: u64,
    },
    Symmetrized {
        base: Box<ProcessSpec>,
    },
}

impl ProcessSpec {
    pub fn build(&self) -> Result<Process> {
        match self {
            Self::Chain {
                transition,
                observable,
                step,
                labels,
            } => {
                let c = FiniteChain::new(transition.clone(), observable, *step)?;
                Ok(match labels {
                    Some(l) => c.with_labels(l.clone())?,
                    None => c,
                }
                .into())
            }
            Self::FlipChain { flip } => Ok(FiniteChain::flip(*flip)?.into()),
            Self::Surrogate {
                gamma,
                max_excursion,
            } => Ok(intermittent_surrogate(*gamma, *max_excursion)?.into()),
            Self::Coboundary { base, g } => {
                let base = base.build()?;
                let chain = base.as_chain().ok_or_else(|| {
                    crate::Error::Unsupported("coboundaries need a finite-chain base".into())
                })?;
                Ok(chain.make_coboundary(g)?.into())
            }
            Self::Lsv {
                gamma,
                observable,
                burn_in,
                center,
                reference_len,
                reference_seed,
            } => Ok(match center {
                Some(c) => LsvProcess::new(*gamma, *observable, *burn_in, *c)?,
                None => LsvProcess::with_estimated_center(
                    *gamma,
                    *observable,
                    *burn_in,
                    *reference_len,
                    *reference_seed,
                )?,
            }
            .into()),
            Self::Symmetrized { base } => base.build()?.symmetrize(),
        }
    }
}
