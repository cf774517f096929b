use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cost::{cost_of_paths, CostEstimate};
use crate::adjoint::{hamiltonian_gradient, solve_adjoint};
use crate::error::{Error, Result};
use crate::kernel::{NoiseBundle, TimeGrid};
use crate::model::{Arg, EvalCtx, ProblemSpec};
use crate::paths::{AdjointPaths, StatePaths};
use crate::solver::{solve_coupled, ControlProcess, PicardOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AscentMode {
    /// deterministic `u_i`, moved by the path-averaged `H_v`
    OpenLoop,
    /// `u_i = Π_U(a_i + K_i y)`, moved by the least-squares fit of `H_v` on
    /// `(1, y)`
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub step: f64,
    pub max_step: f64,
    /// consecutive accepted steps before the step doubles
    pub grow_after: usize,
    pub min_step: f64,
    pub max_iter: usize,
    /// stop when `max_i ‖Π_U(u_i + ĝ_i) − u_i‖ ≤ grad_tol`
    pub grad_tol: f64,
    /// allowed cost increase of an accepted step
    pub cost_slack: f64,
    /// fraction of the first-order predicted decrease a step must achieve
    pub armijo: f64,
    pub mode: AscentMode,
    pub solver: PicardOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_step: 8.0,
            grow_after: 3,
            min_step: 1e-10,
            max_iter: 200,
            grad_tol: 1e-3,
            cost_slack: 1e-9,
            armijo: 0.1,
            mode: AscentMode::OpenLoop,
            solver: PicardOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub control: ControlProcess,
    pub cost: f64,
    pub se: f64,
    pub step: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub stop_reason: String,
}

impl OptimizerTrace {
    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    /// `iteration,cost,se,step,gradient_norm`
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "iteration,cost,se,step,gradient_norm")?;
        for r in &self.records {
            writeln!(out, "{},{:e},{:e},{:e},{:e}", r.iteration, r.cost, r.se, r.step, r.gradient_norm)?;
        }
        Ok(())
    }

    pub fn non_increasing(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost + slack)
    }
}

/// `H_v` at every `(node, path)` of a solved state/adjoint pair.
pub fn control_gradients(
    spec: &ProblemSpec,
    state: &StatePaths,
    adjoint: &AdjointPaths,
    u: &ControlProcess,
    grid: &TimeGrid,
) -> Result<Vec<Vec<Vec<f64>>>> {
    use rayon::prelude::*;
    let r = spec.dims.r;
    (0..grid.nodes())
        .map(|i| {
            (0..state.paths())
                .into_par_iter()
                .map(|p| {
                    let pt = state.point(i, p);
                    let ctx = EvalCtx { t: grid.t(i), step: i, path: p };
                    let mut g = vec![0.0; r];
                    hamiltonian_gradient(spec, Arg::V, &ctx, &pt, &u.value(i, pt.y), &adjoint.point(i, p), &mut g)?;
                    Ok(g)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Ascent direction in the parameters of `u`: for open loop, one `r`-vector
/// per node; for feedback, per node the offset followed by the row-major gain.
fn direction(spec: &ProblemSpec, grads: &[Vec<Vec<f64>>], state: &StatePaths, mode: AscentMode) -> Vec<Vec<f64>> {
    let r = spec.dims.r;
    let n = spec.dims.n;
    grads
        .iter()
        .enumerate()
        .map(|(i, per_path)| {
            let m = per_path.len() as f64;
            match mode {
                AscentMode::OpenLoop => (0..r).map(|a| per_path.iter().map(|g| g[a]).sum::<f64>() / m).collect(),
                AscentMode::Feedback => {
                    let x = DMatrix::from_fn(per_path.len(), n + 1, |p, c| {
                        if c == 0 {
                            1.0
                        } else {
                            state.y.get(i, p)[c - 1]
                        }
                    });
                    let svd = x.clone().svd(true, true);
                    let mut offset = vec![0.0; r];
                    let mut gain = vec![0.0; r * n];
                    for a in 0..r {
                        let target = DVector::from_iterator(per_path.len(), per_path.iter().map(|g| g[a]));
                        let coef = svd.solve(&target, 1e-12).unwrap_or_else(|_| DVector::zeros(n + 1));
                        offset[a] = coef[0];
                        for c in 0..n {
                            gain[a * n + c] = coef[c + 1];
                        }
                    }
                    offset.into_iter().chain(gain).collect()
                }
            }
        })
        .collect()
}

fn params(u: &ControlProcess, r: usize, n: usize) -> Vec<Vec<f64>> {
    match u {
        ControlProcess::OpenLoop { values } => values.clone(),
        ControlProcess::Feedback { offset, gain, .. } => offset
            .iter()
            .zip(gain)
            .map(|(o, g)| o.iter().chain(g.iter()).copied().collect())
            .collect(),
    }
    .into_iter()
    .map(|mut v| {
        v.resize(if u.is_open_loop() { r } else { r + r * n }, 0.0);
        v
    })
    .collect()
}

fn step_control(spec: &ProblemSpec, u: &ControlProcess, dir: &[Vec<f64>], alpha: f64) -> Result<ControlProcess> {
    let (r, n) = (spec.dims.r, spec.dims.n);
    let moved: Vec<Vec<f64>> = params(u, r, n)
        .iter()
        .zip(dir)
        .map(|(x, g)| x.iter().zip(g).map(|(a, b)| a + alpha * b).collect())
        .collect();
    if u.is_open_loop() {
        ControlProcess::open_loop(&spec.controls, moved)
    } else {
        let offset = moved.iter().map(|v| v[..r].to_vec()).collect();
        let gain = moved.iter().map(|v| v[r..].to_vec()).collect();
        ControlProcess::feedback(&spec.controls, offset, gain)
    }
}

/// `max_i ‖Π_U(u_i + ĝ_i) − u_i‖` over nodes (open loop), or the sup norm of
/// the fitted direction (feedback).
fn projected_gradient_norm(spec: &ProblemSpec, u: &ControlProcess, dir: &[Vec<f64>]) -> f64 {
    match u.values() {
        Some(values) => values
            .iter()
            .zip(dir)
            .map(|(ui, gi)| {
                let moved: Vec<f64> = ui.iter().zip(gi).map(|(a, b)| a + b).collect();
                let proj = spec.controls.project(&moved);
                proj.iter().zip(ui).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max),
        None => dir
            .iter()
            .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
    }
}

/// `E Σ_{i<N} ⟨H_v, trial_i − u_i⟩Δt` with `H_v` and the state at `u`.
fn predicted_decrease(
    grads: &[Vec<Vec<f64>>],
    state: &StatePaths,
    u: &ControlProcess,
    trial: &ControlProcess,
    grid: &TimeGrid,
) -> f64 {
    let paths = state.paths() as f64;
    grads
        .iter()
        .take(grid.steps())
        .enumerate()
        .map(|(i, per_path)| {
            let total: f64 = per_path
                .iter()
                .enumerate()
                .map(|(p, g)| {
                    let y = state.y.get(i, p);
                    let (a, b) = (trial.value(i, y), u.value(i, y));
                    g.iter().zip(a.iter().zip(&b)).map(|(gi, (ai, bi))| gi * (ai - bi)).sum::<f64>()
                })
                .sum();
            total / paths * grid.dt()
        })
        .sum()
}

/// Projected ascent on the Hamiltonian, `u ← Π_U(u + α·ĝ)` with `ĝ` built from
/// `H_v` along the current state and adjoint, all on one noise bundle.
///
/// A step is accepted when `J(trial) ≤ J(u) + cost_slack − armijo·D`, where
/// `D = E Σ_i ⟨H_v, trial_i − u_i⟩Δt ≥ 0` is the first-order predicted
/// decrease; otherwise `α` halves. After `grow_after` accepted steps in a
/// row `α` doubles, up to `max_step`. A state or adjoint solve that does not
/// converge stops the run with the iterates so far.
pub fn optimize_control(
    spec: &ProblemSpec,
    u0: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    opts: &OptimizerOptions,
) -> Result<(ControlProcess, OptimizerTrace)> {
    if !(opts.step > 0.0 && opts.max_step >= opts.step && opts.grad_tol > 0.0 && (0.0..1.0).contains(&opts.armijo)) {
        return Err(Error::Validation(
            "optimizer needs 0 < step <= max_step, grad_tol > 0 and armijo in [0, 1)".into(),
        ));
    }
    let mut u = match (opts.mode, u0) {
        (AscentMode::Feedback, ControlProcess::OpenLoop { values }) => {
            let gain = vec![vec![0.0; spec.dims.r * spec.dims.n]; values.len()];
            ControlProcess::feedback(&spec.controls, values.clone(), gain)?
        }
        _ => u0.clone(),
    };
    let mut trace = OptimizerTrace {
        records: Vec::new(),
        converged: false,
        stop_reason: format!("reached max_iter = {}", opts.max_iter),
    };
    let (mut state, report) = solve_coupled(spec, &u, noise, grid, &opts.solver)?;
    if !report.converged {
        trace.stop_reason = format!("state solve did not converge at iteration 0: {}", report.stop_reason);
        return Ok((u, trace));
    }
    let mut cost: CostEstimate = cost_of_paths(spec, &state, &u, grid);
    let mut alpha = opts.step;
    let mut streak = 0;

    for iteration in 0..=opts.max_iter {
        let (adjoint, arep) = solve_adjoint(spec, &state, &u, noise, grid, &opts.solver)?;
        if !arep.converged {
            trace.stop_reason = format!("adjoint solve did not converge at iteration {iteration}: {}", arep.stop_reason);
            break;
        }
        let grads = control_gradients(spec, &state, &adjoint, &u, grid)?;
        let dir = direction(spec, &grads, &state, opts.mode);
        let gnorm = projected_gradient_norm(spec, &u, &dir);
        trace.records.push(IterationRecord {
            iteration,
            control: u.clone(),
            cost: cost.value,
            se: cost.se,
            step: alpha,
            gradient_norm: gnorm,
        });
        if gnorm <= opts.grad_tol {
            trace.converged = true;
            trace.stop_reason = format!("projected gradient {gnorm:.3e} <= {:.1e}", opts.grad_tol);
            break;
        }
        if iteration == opts.max_iter {
            break;
        }
        let accepted = loop {
            let trial = step_control(spec, &u, &dir, alpha)?;
            let (trial_state, trep) = solve_coupled(spec, &trial, noise, grid, &opts.solver)?;
            if !trep.converged {
                trace.stop_reason =
                    format!("state solve did not converge at iteration {}: {}", iteration + 1, trep.stop_reason);
                break None;
            }
            let trial_cost = cost_of_paths(spec, &trial_state, &trial, grid);
            let decrease = predicted_decrease(&grads, &state, &u, &trial, grid);
            if trial_cost.value <= cost.value + opts.cost_slack - opts.armijo * decrease {
                streak += 1;
                if streak >= opts.grow_after {
                    alpha = (2.0 * alpha).min(opts.max_step);
                    streak = 0;
                }
                break Some((trial, trial_state, trial_cost));
            }
            alpha *= 0.5;
            streak = 0;
            if alpha < opts.min_step {
                trace.stop_reason = format!("step size fell below {:.1e}", opts.min_step);
                break None;
            }
        };
        match accepted {
            Some((next, next_state, next_cost)) => {
                u = next;
                state = next_state;
                cost = next_cost;
            }
            None => break,
        }
    }
    Ok((u, trace))
}
