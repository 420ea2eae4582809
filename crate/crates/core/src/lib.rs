//! Random-walk / finite-difference approximation of the backward heat
//! equation `u_t + (sigma^2/2) u_xx = 0`, `u(T, .) = g`, with the tooling to
//! measure its error.
//!
//! * [`terminal`] terminal conditions (bounded-variation type, Hölder, exponentially bounded)
//! * [`exact_heat`] the Gaussian-smoothing solution used as ground truth
//! * [`lattice`] the discrete solution via the recursion and the binomial sum
//! * [`projections`] lattice linear interpolation and the deterministic local error
//! * [`bridge`] Brownian-bridge exit quantities and the q-table
//! * [`exit_mc`] Monte Carlo over the exit-time embedding of the walk
//! * [`lab`] decomposition, rate fits and the experiment drivers behind the CLI

// `!(a < b)` guards deliberately reject NaN; reference constants keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bridge;
pub mod error;
pub mod exact_heat;
pub mod exit_mc;
pub mod lab;
pub mod lattice;
pub mod projections;
pub mod quadrature;
pub mod special;
pub mod terminal;

pub use error::{Error, Result};
