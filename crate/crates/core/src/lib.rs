//! Simulation and verification toolkit for deviation inequalities and strong
//! Gaussian approximation of weakly dependent bounded sequences.
//!
//! The crate is organised bottom-up:
//!
//! * [`processes`] builds stationary dependent sequences (finite lattice
//!   Markov chains, intermittent-map orbits, coboundaries, symmetrized pairs)
//!   and samples them reproducibly.
//! * [`coefficients`] computes dependence coefficients exactly on finite
//!   chains, together with the variance rate and the aggregate series that
//!   the tail bound consumes.
//! * [`bounds`] evaluates the Fuk-Nagaev right-hand side, estimates tail
//!   probabilities by Monte Carlo and fits the free numerical constants.
//! * [`coupling`] runs the dyadic-block conditional quantile construction
//!   that produces i.i.d. Gaussian partial sums close to the original ones.
//!
//! [`rng`], [`lattice`], [`normal`] and [`stats`] hold shared numerics.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coefficients;
pub mod coupling;
pub mod error;
pub mod lattice;
pub mod normal;
pub mod processes;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
