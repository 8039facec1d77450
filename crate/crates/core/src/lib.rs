//! Cost-aware learning from multiple experiments.
//!
//! A learner draws `n_j` samples from each of `m` experiments, paying `c_j`
//! per sample out of a total budget `C`. This crate provides:
//!
//! * [`allocation`]: the budget-optimal split of samples across experiments,
//!   in closed form and via an independent dual-bisection solver.
//! * [`bounds`]: divergence bounds driven by (empirical) Rademacher
//!   complexities, their `O(C^{-1/2})` budget forms, and per-class constants
//!   for linear predictors, two-layer networks and kernel expansions.
//! * [`rademacher`]: Monte Carlo estimates of the empirical Rademacher
//!   complexity of norm-bounded linear classes.
//! * [`synthetic`]: the hidden-variable regression study, a ball-constrained
//!   least-squares solver, the analytic divergence and identifiability
//!   diagnostics.
//! * [`harness`]: repetition sweeps over `(C, m)` grids with CSV and SVG output.
//!
//! The `costaware` binary exposes the same functionality on the command line.

pub mod allocation;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod rademacher;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
