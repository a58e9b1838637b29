//! Exact verification and exploration toolkit for the fractional 3n+1 map
//!
//! ```text
//! delta(x) = x/2         if frac(x) < 1/2
//!            (3x+1)/2    otherwise
//! ```
//!
//! The crate certifies that every seed in `[0, 100]` either converges to zero
//! or enters the attracting 29-cycle through `616136875/407730749`, using only
//! exact rational arithmetic, and provides orbit statistics and variant
//! censuses around it.

// errors carry the offending rationals by value; they are cold paths
#![allow(clippy::result_large_err)]

pub mod affine;
pub mod analysis;
pub mod cli;
pub mod cycle;
pub mod error;
pub mod map;
pub mod piecewise;
pub mod prover;
pub mod rational;
pub mod table;
pub mod theorem;
pub mod variant;

pub use affine::{affine_from_word, fixed_point, trace_interval, Affine, BranchWord, DyadicAffine, HalfOpenInterval};
pub use cycle::{cycle_descriptor, CycleDescriptor, CONJECTURED_PATTERN};
pub use error::{AffineError, MapError, ProverError};
pub use map::{branch_of, delta, frac, orbit, Branch, MapParams, NumericMode};
pub use prover::{next_bound, prove_interval, ProverConfig, ProverResult};
pub use rational::Rational;
