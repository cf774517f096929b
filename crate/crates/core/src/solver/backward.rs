use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::ControlProcess;
use super::forward::check_compatible;
use super::regression::Projector;
use crate::error::{Error, Result};
use crate::kernel::{NoiseBundle, TimeGrid};
use crate::model::{Coef, EvalCtx, ProblemSpec, StatePoint};
use crate::paths::{PathField, StatePaths};

/// Regression settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Total polynomial degree in the state and backward-noise features.
    pub degree: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { degree: 2 }
    }
}

/// Per-node regression diagnostics of one backward sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDiagnostics {
    /// Gram-matrix condition number of the backward regression at each node
    /// `0..N`.
    pub conditions: Vec<f64>,
    /// Same for the `z` regression at nodes `1..=N`.
    pub z_conditions: Vec<f64>,
    pub max_condition: f64,
}

fn features_at(
    blocks: &[&dyn Fn(usize) -> Vec<f64>],
    paths: usize,
) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..paths)
        .map(|p| blocks.iter().flat_map(|f| f(p)).collect())
        .collect();
    let width = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(paths, width, |r, c| rows[r][c])
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), width, |r, c| rows[r][c])
}

/// Backward regression sweep for `(Y, Z, k)` and the forward `dB̄`
/// integrand `z`, given the forward path `y`.
///
/// At node `i`, with `T = Y_{i+1} + g_{i+1}ΔB_i` and `Ê_i` the projection on
/// polynomial features of `(y_i, B_T − B_{t_i})`:
///
/// ```text
/// Ŷ   = Ê_i[T]
/// Z_i = Ê_i[(T − Ŷ)ΔW_iᵀ] / Δt
/// k_i(ρ_j) = Ê_i[(T − Ŷ)ΔÑ_ij] / (w_j Δt)
/// Y_i = Ŷ + f(t_i, y_i, Ŷ, z_i, Z_i, k_i, u_i) Δt
/// ```
///
/// `z_{i+1}` is the `ΔB_i`-loading of `y_i + b_iΔt + σ_iΔW_i + Σφ_iΔÑ_i`
/// projected on information at `t_{i+1}`, which excludes `ΔB_i`. The `z` used
/// inside `g` and `f` comes from `guess` (zero without one); so do `Z_N`,
/// `k_N` inside `g_N`. On output `Z_N = Z_{N−1}`, `k_N = k_{N−1}`, `z_0 = z_1`.
pub fn solve_backward(
    spec: &ProblemSpec,
    y: &PathField,
    guess: Option<&StatePaths>,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    basis: BasisSpec,
) -> Result<(StatePaths, RegressionDiagnostics)> {
    check_compatible(spec, u, noise, grid)?;
    let shape = spec.shape();
    let dims = shape.dims;
    let (n, m, d, l, marks) = (dims.n, dims.m, dims.d, dims.l, shape.marks);
    let steps = grid.steps();
    let paths = noise.paths();
    let dt = grid.dt();
    if y.nodes() != steps + 1 || y.paths() != paths || y.width() != n {
        return Err(Error::shape("forward path", (steps + 1) * paths * n, y.as_slice().len()));
    }

    let mut out = StatePaths::zeros(&shape, steps + 1, paths);
    out.y = y.clone();
    let zero_guess;
    let guess = match guess {
        Some(g) => g,
        None => {
            zero_guess = StatePaths::zeros(&shape, steps + 1, paths);
            &zero_guess
        }
    };

    for p in 0..paths {
        let mut h = vec![0.0; m];
        spec.terminal.eval(y.get(steps, p), p, &mut h);
        out.big_y.get_mut(steps, p).copy_from_slice(&h);
    }

    let extra = spec.features.as_deref();
    let mut conditions = vec![0.0; steps];
    for i in (0..steps).rev() {
        // target T = Y_{i+1} + g_{i+1}ΔB_i
        let next_z = if i + 1 == steps { &guess.big_z } else { &out.big_z };
        let next_k = if i + 1 == steps { &guess.k } else { &out.k };
        let targets: Vec<Vec<f64>> = (0..paths)
            .into_par_iter()
            .map(|p| {
                let yy = y.get(i + 1, p);
                let pt = StatePoint {
                    y: yy,
                    big_y: out.big_y.get(i + 1, p),
                    z: guess.z.get(i + 1, p),
                    big_z: next_z.get(i + 1, p),
                    k: next_k.get(i + 1, p),
                };
                let ctx = EvalCtx {
                    t: grid.t(i + 1),
                    step: i + 1,
                    path: p,
                };
                let mut g = vec![0.0; m * l];
                spec.coeffs
                    .eval(Coef::BackwardDiffusion, &ctx, &pt, &u.value(i + 1, yy), &mut g);
                let db = noise.db(i, p);
                (0..m)
                    .map(|a| pt.big_y[a] + (0..l).map(|c| g[a * l + c] * db[c]).sum::<f64>())
                    .collect()
            })
            .collect();
        let target = to_matrix(&targets);

        let y_feat = |p: usize| y.get(i, p).to_vec();
        let s_feat = |p: usize| noise.b_tail(i, p).to_vec();
        let e_feat = |p: usize| extra.map_or(Vec::new(), |f| f.get(i, p).to_vec());
        let feats = features_at(&[&y_feat, &s_feat, &e_feat], paths);
        let proj = Projector::new(&feats, basis.degree);
        conditions[i] = proj.condition();

        let fitted = proj.project(&target);
        let resid = &target - &fitted;
        let loadings = DMatrix::from_fn(paths, m * d + m * marks, |p, col| {
            if col < m * d {
                let (a, c) = (col / d, col % d);
                resid[(p, a)] * noise.dw(i, p)[c] / dt
            } else {
                let idx = col - m * d;
                let (a, j) = (idx / marks, idx % marks);
                resid[(p, a)] * noise.dn(i, p, j) / (noise.weights()[j] * dt)
            }
        });
        let zk = proj.project(&loadings);
        for p in 0..paths {
            for col in 0..m * d {
                out.big_z.get_mut(i, p)[col] = zk[(p, col)];
            }
            for col in 0..m * marks {
                out.k.get_mut(i, p)[col] = zk[(p, m * d + col)];
            }
        }

        let ys: Vec<Result<Vec<f64>>> = (0..paths)
            .into_par_iter()
            .map(|p| {
                let yhat: Vec<f64> = (0..m).map(|a| fitted[(p, a)]).collect();
                let yy = y.get(i, p);
                let pt = StatePoint {
                    y: yy,
                    big_y: &yhat,
                    z: guess.z.get(i, p),
                    big_z: out.big_z.get(i, p),
                    k: out.k.get(i, p),
                };
                let ctx = EvalCtx {
                    t: grid.t(i),
                    step: i,
                    path: p,
                };
                let mut f = vec![0.0; m];
                spec.coeffs.eval(Coef::Driver, &ctx, &pt, &u.value(i, yy), &mut f);
                let next: Vec<f64> = yhat.iter().zip(&f).map(|(a, b)| a + b * dt).collect();
                if next.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "backward state",
                        step: i,
                        path: p,
                    });
                }
                Ok(next)
            })
            .collect();
        for (p, next) in ys.into_iter().enumerate() {
            out.big_y.get_mut(i, p).copy_from_slice(&next?);
        }
    }
    for p in 0..paths {
        let z_last = out.big_z.get(steps - 1, p).to_vec();
        out.big_z.get_mut(steps, p).copy_from_slice(&z_last);
        let k_last = out.k.get(steps - 1, p).to_vec();
        out.k.get_mut(steps, p).copy_from_slice(&k_last);
    }

    let z_conditions = regress_forward_loading(spec, y, guess, &mut out, noise, grid, basis)?;

    let max_condition = conditions
        .iter()
        .chain(&z_conditions)
        .cloned()
        .fold(0.0, f64::max);
    Ok((
        out,
        RegressionDiagnostics {
            conditions,
            z_conditions,
            max_condition,
        },
    ))
}

/// Fills `out.z` from the `ΔB`-dependence the Euler step would give `y_{i+1}`.
fn regress_forward_loading(
    spec: &ProblemSpec,
    y: &PathField,
    guess: &StatePaths,
    out: &mut StatePaths,
    noise: &NoiseBundle,
    grid: &TimeGrid,
    basis: BasisSpec,
) -> Result<Vec<f64>> {
    let dims = spec.dims;
    let (n, l) = (dims.n, dims.l);
    let steps = grid.steps();
    let paths = noise.paths();
    let dt = grid.dt();
    let extra = spec.features.as_deref();
    let mut conditions = Vec::with_capacity(steps);
    for next in 1..=steps {
        let i = next - 1;
        // undo the guessed dB̄ term: ỹ = y_{i+1} + z_{i+1}ΔB_i
        let pre = DMatrix::from_fn(paths, n, |p, a| {
            let z = guess.z.get(next, p);
            let db = noise.db(i, p);
            y.get(next, p)[a] + (0..l).map(|c| z[a * l + c] * db[c]).sum::<f64>()
        });
        let s_feat = |p: usize| noise.b_tail(next, p).to_vec();
        let e_feat = |p: usize| extra.map_or(Vec::new(), |f| f.get(next, p).to_vec());
        let w_feat = |p: usize| noise.w_cum(next, p).to_vec();
        let n_feat = |p: usize| noise.n_cum(next, p).to_vec();
        let quad = features_at(&[&s_feat, &e_feat], paths);
        let lin = features_at(&[&w_feat, &n_feat], paths);
        let proj = Projector::mixed(&quad, &lin, basis.degree);
        conditions.push(proj.condition());
        let centered = &pre - proj.project(&pre);
        let loadings = DMatrix::from_fn(paths, n * l, |p, col| {
            let (a, c) = (col / l, col % l);
            centered[(p, a)] * noise.db(i, p)[c] / dt
        });
        let z = proj.project(&loadings);
        for p in 0..paths {
            for col in 0..n * l {
                out.z.get_mut(next, p)[col] = z[(p, col)];
            }
        }
    }
    for p in 0..paths {
        let z1 = out.z.get(1, p).to_vec();
        out.z.get_mut(0, p).copy_from_slice(&z1);
    }
    Ok(conditions)
}
