use serde::{Deserialize, Serialize};

use super::backward::{solve_backward, BasisSpec};
use super::control::ControlProcess;
use super::forward::{check_compatible, simulate_forward};
use crate::error::{Error, Result};
use crate::kernel::{discrete_norm_m2, NoiseBundle, TimeGrid};
use crate::model::ProblemSpec;
use crate::paths::{PathField, StatePaths};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Damping `θ ∈ (0, 1]` of `ζ ← (1−θ)ζ + θζ̂`.
    pub theta: f64,
    /// Stop when the `𝕄²` change of one damped update is at most this.
    pub tol: f64,
    pub max_iter: usize,
    pub basis: BasisSpec,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tol: 1e-4,
            max_iter: 50,
            basis: BasisSpec::default(),
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Validation(format!(
                "damping must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be at least 1".into()));
        }
        if !(1..=2).contains(&self.basis.degree) {
            return Err(Error::Validation("basis degree must be 1 or 2".into()));
        }
        Ok(())
    }
}

/// Outcome of a coupled solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// `𝕄²` norm of each damped update.
    pub changes: Vec<f64>,
    /// `max |Y_N − h(y_N)|` over paths.
    pub terminal_residual: f64,
    /// `max |y_0 − x_0|` over paths.
    pub initial_residual: f64,
    /// Worst regression condition number seen in the last sweep.
    pub max_condition: f64,
    /// Why the iteration stopped.
    pub stop_reason: String,
}

/// Growth of the update norm over its running minimum that counts as blow-up.
const DIVERGENCE_FACTOR: f64 = 1e4;

/// Starting point of the iteration: `y ≡ x_0`, `Y ≡ h(x_0)`, `z = Z = k = 0`.
pub fn initial_guess(spec: &ProblemSpec, grid: &TimeGrid, paths: usize) -> StatePaths {
    let shape = spec.shape();
    let nodes = grid.nodes();
    let mut guess = StatePaths::zeros(&shape, nodes, paths);
    let m = spec.dims.m;
    guess.y = PathField::from_fn(nodes, paths, spec.dims.n, |_, p, out| out.copy_from_slice(spec.x0(p)));
    let mut h = vec![0.0; m];
    for p in 0..paths {
        spec.terminal.eval(spec.x0(p), p, &mut h);
        for i in 0..nodes {
            guess.big_y.get_mut(i, p).copy_from_slice(&h);
        }
    }
    guess
}

/// Solves the coupled system for a fixed control by damped Picard iteration
/// over forward Euler and backward regression sweeps.
///
/// Non-convergence (including blow-up to non-finite values, or an update norm
/// growing to `10⁴` times its smallest value so far) is reported in
/// [`SolveReport`], not raised; the returned paths are then the last finite
/// iterate.
pub fn solve_coupled(
    spec: &ProblemSpec,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    opts: &PicardOptions,
) -> Result<(StatePaths, SolveReport)> {
    opts.validate()?;
    check_compatible(spec, u, noise, grid)?;
    let weights = spec.jumps.weights();
    let mut current = initial_guess(spec, grid, noise.paths());
    let mut changes = Vec::new();
    let mut converged = false;
    let mut max_condition = 0.0;
    let mut min_change = f64::INFINITY;
    let mut stop_reason = format!("reached max_iter = {}", opts.max_iter);

    for _ in 0..opts.max_iter {
        let y = match simulate_forward(spec, &current, u, noise, grid) {
            Ok(y) => y,
            Err(Error::NonFinite { what, step, path }) => {
                stop_reason = format!("diverged: non-finite {what} at step {step}, path {path}");
                break;
            }
            Err(e) => return Err(e),
        };
        let (fresh, diag) = match solve_backward(spec, &y, Some(&current), u, noise, grid, opts.basis) {
            Ok(out) => out,
            Err(Error::NonFinite { what, step, path }) => {
                stop_reason = format!("diverged: non-finite {what} at step {step}, path {path}");
                break;
            }
            Err(e) => return Err(e),
        };
        if !fresh.all_finite() {
            stop_reason = "diverged: non-finite regression output".into();
            break;
        }
        max_condition = diag.max_condition;
        let change = opts.theta * discrete_norm_m2(&fresh.sub(&current), grid, weights)?.value;
        current.relax_towards(&fresh, opts.theta);
        changes.push(change);
        if !change.is_finite() {
            stop_reason = "diverged: non-finite update".into();
            break;
        }
        min_change = min_change.min(change);
        if change > DIVERGENCE_FACTOR * min_change {
            stop_reason = format!(
                "diverged: update norm {change:.3e} exceeds {DIVERGENCE_FACTOR:.0e} times its minimum {min_change:.3e}"
            );
            break;
        }
        if change <= opts.tol {
            converged = true;
            stop_reason = format!("update norm {change:.3e} <= tol {:.1e}", opts.tol);
            break;
        }
    }

    let report = SolveReport {
        converged,
        iterations: changes.len(),
        terminal_residual: terminal_residual(spec, &current),
        initial_residual: initial_residual(spec, &current),
        changes,
        max_condition,
        stop_reason,
    };
    Ok((current, report))
}

pub fn terminal_residual(spec: &ProblemSpec, paths: &StatePaths) -> f64 {
    let last = paths.nodes() - 1;
    let mut h = vec![0.0; spec.dims.m];
    let mut worst: f64 = 0.0;
    for p in 0..paths.paths() {
        spec.terminal.eval(paths.y.get(last, p), p, &mut h);
        for (a, b) in paths.big_y.get(last, p).iter().zip(&h) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

pub fn initial_residual(spec: &ProblemSpec, paths: &StatePaths) -> f64 {
    let mut worst: f64 = 0.0;
    for p in 0..paths.paths() {
        for (a, b) in paths.y.get(0, p).iter().zip(spec.x0(p)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}
