//! Numerical toolkit for controlled, fully coupled forward-backward doubly
//! stochastic differential equations driven by two Brownian motions and a
//! compensated Poisson random measure.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] describes a control problem: dimensions, coefficient
//!   evaluators, the affine terminal map, the cost and the control set.
//! * [`kernel`] holds time grids, reproducible noise, discrete norms and the
//!   discrete product rule.
//! * [`solver`] solves the coupled system by forward Euler, least-squares
//!   Monte Carlo and damped Picard iteration.
//! * [`adjoint`] evaluates the Hamiltonian, assembles the adjoint system and
//!   solves it with the same machinery.
//! * [`audit`] checks the hypotheses of the sufficient maximum principle and
//!   the duality identities, and renders a verdict.
//! * [`optimize`] estimates costs and runs projected Hamiltonian ascent.
//! * [`cli`] drives the pipelines and writes reproducible artifacts.

pub mod adjoint;
pub mod audit;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod model;
pub mod optimize;
pub mod paths;
pub mod solver;

pub use error::{Error, Result};
