//! Cost estimation and control synthesis by projected Hamiltonian ascent.

mod ascent;
mod cost;

pub use ascent::{control_gradients, optimize_control, AscentMode, IterationRecord, OptimizerOptions, OptimizerTrace};
pub use cost::{cost_components, cost_of_paths, estimate_cost, CostEstimate};
