//! Hamiltonian, its gradients, and the adjoint equations solved by the
//! coupled solver with the roles of the forward and backward slots swapped.

mod hamiltonian;
mod solve;
mod system;

pub use hamiltonian::{eval_hamiltonian, eval_hamiltonian_gradients, gradient_fd_discrepancy, hamiltonian_gradient, HamiltonianGradients};
pub use solve::solve_adjoint;
pub use system::{adjoint_control, assemble_adjoint_coefficients, MirroredCoefficients};
