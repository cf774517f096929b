//! Discrete solver for the coupled system: forward Euler for `y`,
//! least-squares Monte Carlo for `(Y, Z, k)` and `z`, damped Picard
//! iteration over the coupling.
//!
//! Conditional expectations at `t_i` may use the backward increments
//! `B_T − B_{t_i}`: the information at `t_i` is generated by `W` up to `t_i`,
//! the jumps up to `t_i` and `B` after `t_i`.

mod backward;
mod control;
mod export;
mod forward;
mod picard;
mod regression;

pub use backward::{solve_backward, BasisSpec, RegressionDiagnostics};
pub use control::ControlProcess;
pub use export::write_paths_csv;
pub use forward::simulate_forward;
pub use picard::{initial_guess, initial_residual, solve_coupled, terminal_residual, PicardOptions, SolveReport};
pub use regression::Projector;
