use super::system::{adjoint_control, assemble_adjoint_coefficients};
use crate::error::Result;
use crate::kernel::{NoiseBundle, TimeGrid};
use crate::model::ProblemSpec;
use crate::paths::{AdjointPaths, StatePaths};
use crate::solver::{solve_coupled, ControlProcess, PicardOptions, SolveReport};

/// Solves the adjoint equations along `state` with the coupled solver, on the
/// noise the state was solved with.
pub fn solve_adjoint(
    spec: &ProblemSpec,
    state: &StatePaths,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    opts: &PicardOptions,
) -> Result<(AdjointPaths, SolveReport)> {
    let mirrored = assemble_adjoint_coefficients(spec, state, u)?;
    let control = adjoint_control(grid.nodes());
    let (paths, report) = solve_coupled(&mirrored, &control, noise, grid, opts)?;
    Ok((AdjointPaths::from_mirrored(paths), report))
}
