use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{mean_se, NoiseBundle, TimeGrid};
use crate::model::{EvalCtx, ProblemSpec};
use crate::paths::StatePaths;
use crate::solver::{solve_coupled, ControlProcess, PicardOptions};

/// Monte Carlo estimate of `J = E[Σ_i ℓ_iΔt + β(y_N) + γ(Y_0)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub value: f64,
    pub se: f64,
    pub running: f64,
    pub terminal: f64,
    pub initial: f64,
    pub paths: usize,
}

/// Per-path cost `(running, terminal, initial)`; the running part is a left
/// Riemann sum over `i < N`.
pub fn cost_components(spec: &ProblemSpec, state: &StatePaths, u: &ControlProcess, grid: &TimeGrid) -> Vec<[f64; 3]> {
    let steps = grid.steps();
    let dt = grid.dt();
    (0..state.paths())
        .into_par_iter()
        .map(|p| {
            let mut running = 0.0;
            for i in 0..steps {
                let pt = state.point(i, p);
                let ctx = EvalCtx { t: grid.t(i), step: i, path: p };
                running += spec.cost.running(&ctx, &pt, &u.value(i, pt.y)) * dt;
            }
            let terminal = spec.cost.terminal(state.y.get(steps, p));
            let initial = spec.cost.initial(state.big_y.get(0, p));
            [running, terminal, initial]
        })
        .collect()
}

/// Cost of an already solved state.
pub fn cost_of_paths(spec: &ProblemSpec, state: &StatePaths, u: &ControlProcess, grid: &TimeGrid) -> CostEstimate {
    let parts = cost_components(spec, state, u, grid);
    let totals: Vec<f64> = parts.iter().map(|c| c[0] + c[1] + c[2]).collect();
    let (value, se) = mean_se(&totals);
    let mean_of = |k: usize| parts.iter().map(|c| c[k]).sum::<f64>() / parts.len().max(1) as f64;
    CostEstimate {
        value,
        se,
        running: mean_of(0),
        terminal: mean_of(1),
        initial: mean_of(2),
        paths: parts.len(),
    }
}

/// Solves the state for `u` and estimates its cost. Fails with
/// [`Error::NotConverged`] if the coupled solve does not converge.
pub fn estimate_cost(
    spec: &ProblemSpec,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    opts: &PicardOptions,
) -> Result<CostEstimate> {
    let (state, report) = solve_coupled(spec, u, noise, grid, opts)?;
    if !report.converged {
        return Err(Error::NotConverged(report.stop_reason));
    }
    Ok(cost_of_paths(spec, &state, u, grid))
}
