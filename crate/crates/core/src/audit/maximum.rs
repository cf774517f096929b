use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::eval_hamiltonian;
use crate::error::{Error, Result};
use crate::kernel::TimeGrid;
use crate::model::{EvalCtx, ProblemSpec};
use crate::paths::{AdjointPaths, StatePaths};
use crate::solver::ControlProcess;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxConditionOptions {
    /// grid points per control coordinate
    pub per_dim: usize,
    /// allowed `max_grid H − H(u)`
    pub tolerance: f64,
    /// evenly spaced subsample of paths; `None` checks every path
    pub max_paths: Option<usize>,
}

impl Default for MaxConditionOptions {
    fn default() -> Self {
        Self {
            per_dim: 41,
            tolerance: 1e-8,
            max_paths: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxConditionReport {
    /// `max over checked (node, path) of max_grid H(v) − H(u)`
    pub worst_gap: f64,
    pub worst_node: usize,
    pub worst_path: usize,
    /// grid maximiser at the worst point
    pub worst_argmax: Vec<f64>,
    /// largest distance between `u` and the grid maximiser
    pub max_argmax_distance: f64,
    pub grid_points: usize,
    pub checked_points: usize,
    pub tolerance: f64,
    pub ok: bool,
}

/// Grid search of the control set at every node of the selected paths,
/// with the state and adjoint frozen at their solved values.
pub fn check_maximum_condition(
    spec: &ProblemSpec,
    state: &StatePaths,
    adjoint: &AdjointPaths,
    u: &ControlProcess,
    grid: &TimeGrid,
    opts: &MaxConditionOptions,
) -> Result<MaxConditionReport> {
    let candidates = spec.controls.grid(opts.per_dim)?;
    let nodes = state.nodes();
    let paths = state.paths();
    if nodes != grid.nodes() || adjoint.p.nodes() != nodes || adjoint.p.paths() != paths {
        return Err(Error::Validation("state, adjoint and grid disagree on size".into()));
    }
    u.check(nodes, spec.dims.r)?;
    let selected: Vec<usize> = match opts.max_paths {
        Some(k) if k > 0 && k < paths => (0..k).map(|j| j * paths / k).collect(),
        _ => (0..paths).collect(),
    };

    type Point = (f64, usize, usize, Vec<f64>, f64);
    let per_path: Vec<Result<Point>> = selected
        .par_iter()
        .map(|&p| {
            let mut worst: Point = (f64::NEG_INFINITY, 0, p, Vec::new(), 0.0);
            let mut max_dist: f64 = 0.0;
            for i in 0..nodes {
                let pt = state.point(i, p);
                let adj = adjoint.point(i, p);
                let ctx = EvalCtx { t: grid.t(i), step: i, path: p };
                let ui = u.value(i, pt.y);
                let h_u = eval_hamiltonian(spec, &ctx, &pt, &ui, &adj)?;
                let mut best = f64::NEG_INFINITY;
                let mut arg = &candidates[0];
                for v in &candidates {
                    let h = eval_hamiltonian(spec, &ctx, &pt, v, &adj)?;
                    if h > best {
                        best = h;
                        arg = v;
                    }
                }
                let gap = best - h_u;
                let dist = arg.iter().zip(&ui).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                max_dist = max_dist.max(dist);
                if gap > worst.0 {
                    worst = (gap, i, p, arg.clone(), 0.0);
                }
            }
            worst.4 = max_dist;
            Ok(worst)
        })
        .collect();

    let mut worst: Point = (f64::NEG_INFINITY, 0, 0, Vec::new(), 0.0);
    let mut max_dist: f64 = 0.0;
    for r in per_path {
        let r = r?;
        max_dist = max_dist.max(r.4);
        if r.0 > worst.0 {
            worst = r;
        }
    }
    Ok(MaxConditionReport {
        worst_gap: worst.0,
        worst_node: worst.1,
        worst_path: worst.2,
        worst_argmax: worst.3,
        max_argmax_distance: max_dist,
        grid_points: candidates.len(),
        checked_points: selected.len() * nodes,
        tolerance: opts.tolerance,
        ok: worst.0 <= opts.tolerance,
    })
}
