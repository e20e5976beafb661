//! Numerical toolkit for nonlinear potential theory.
//!
//! The crate evaluates dyadic and continuous Wolff and Riesz potentials of
//! nonnegative measures, runs the Picard iteration for the discrete integral
//! equation `u = W(u^q) + eps f`, measures the best constants of the
//! solvability conditions (testing inequalities, the iterated pointwise
//! condition, Frostman growth, Carleson embeddings), and ships closed-form
//! radial solutions of the quasilinear and k-Hessian Lane-Emden equations
//! together with finite-difference residual checks.
//!
//! Module map:
//!
//! * [`params`] exponent bundles, critical exponents, iteration constants
//! * [`dyadic`] dyadic cubes, shifted lattices, Whitney decomposition
//! * [`measures`] point, cell-density and radial power measures
//! * [`potentials`] dyadic and truncated continuous potentials
//! * [`solver`] the nonlinear operator `N f = W(f^q)` and Picard iteration
//! * [`verifiers`] empirical best constants of the solvability conditions
//! * [`oracles`] closed-form radial solutions and brute-force doubles
//! * [`capacity`] dual lower bounds for capacities and energy estimates
//! * [`input`] JSON ingestion and the `key=value` parameter syntax
//! * [`cli`] the `wolffkit` command-line front end

pub mod capacity;
pub mod cli;
pub mod dyadic;
pub mod error;
pub mod input;
pub mod json;
pub mod measures;
pub mod oracles;
pub mod params;
pub mod potentials;
pub mod solver;
pub mod verifiers;

mod geometry;
mod radial;

pub use error::{Error, Result};
pub use params::{IterationConstants, OperatorKind, Params};
pub use potentials::{GenerationWindow, PotentialValue};
