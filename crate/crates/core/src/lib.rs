//! Exact anti-concentration bounds for random walks on groups.
//!
//! Every probability on a certified path is an exact [`Rational`]; irrational
//! intermediates (square roots, fractional powers) are rounded in the
//! direction that keeps the final bound an upper bound.

pub mod dist;
pub mod engine;
pub mod error;
pub mod group;
pub mod lab;
pub mod miner;
pub mod sample;
pub mod scalar;
pub mod selfdim;

pub use dist::{p0_of, walk_law, Distribution, SetPredicate};
pub use error::{Error, Result};
pub use group::{CayleyTable, Element, ElementSet, GroupSpec};
pub use scalar::{Probability, Rational};
pub use selfdim::Certificate;

/// Distribution with exact rational masses.
pub type ExactDist = Distribution<Rational>;
/// Distribution with `f64` masses, for approximate sweeps only.
pub type ApproxDist = Distribution<f64>;
