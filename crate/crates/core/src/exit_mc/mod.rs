//! Exit-time embedding of the lattice walk into Brownian motion, and the Monte Carlo built on it.

pub mod estimators;
pub mod rng;
pub mod tau;
pub mod walk;

pub use estimators::{global_error_mc, global_error_mc_multi, local_error_mc, tail_bound_rhs};
pub use rng::{McEstimate, RngStream};
pub use walk::{simulate_summary, simulate_walk, ExitWalkPath, WalkSummary};
