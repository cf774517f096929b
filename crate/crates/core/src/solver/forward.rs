use rayon::prelude::*;

use super::control::ControlProcess;
use crate::error::{Error, Result};
use crate::kernel::{NoiseBundle, TimeGrid};
use crate::model::{Coef, EvalCtx, ProblemSpec, StatePoint};
use crate::paths::{PathField, StatePaths};

/// Checks that the problem, grid, noise and control agree on sizes.
pub(crate) fn check_compatible(
    spec: &ProblemSpec,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
) -> Result<()> {
    if noise.grid() != grid {
        return Err(Error::Validation("noise bundle was sampled on a different grid".into()));
    }
    if (grid.horizon() - spec.horizon).abs() > 1e-12 * spec.horizon {
        return Err(Error::Validation(format!(
            "grid horizon {} does not match problem horizon {}",
            grid.horizon(),
            spec.horizon
        )));
    }
    let dims = &spec.dims;
    if noise.d() != dims.d || noise.l() != dims.l || noise.marks() != spec.jumps.len() {
        return Err(Error::Validation(
            "noise bundle dimensions do not match the problem".into(),
        ));
    }
    if let crate::model::InitialState::PerPath(all) = &spec.initial {
        if all.len() != noise.paths() {
            return Err(Error::shape("per-path initial values", noise.paths(), all.len()));
        }
    }
    if let crate::model::TerminalShift::PerPath(all) = &spec.terminal.xi {
        if all.len() != noise.paths() {
            return Err(Error::shape("per-path terminal shifts", noise.paths(), all.len()));
        }
    }
    if let Some(features) = &spec.features {
        if features.nodes() != grid.nodes() || features.paths() != noise.paths() {
            return Err(Error::shape(
                "regression feature paths",
                grid.nodes() * noise.paths(),
                features.nodes() * features.paths(),
            ));
        }
    }
    u.check(grid.nodes(), dims.r)
}

/// Euler step of the forward equation with the backward components and the
/// `dB̄` integrand taken from `guess`:
///
/// `y_{i+1} = y_i + b_iΔt + σ_iΔW_i + Σ_j φ_i(ρ_j)ΔÑ_ij − z_{i+1}ΔB_i`,
///
/// coefficients at `(t_i, y_i, Y_i, z_i, Z_i, k_i, u_i)`.
pub fn simulate_forward(
    spec: &ProblemSpec,
    guess: &StatePaths,
    u: &ControlProcess,
    noise: &NoiseBundle,
    grid: &TimeGrid,
) -> Result<PathField> {
    check_compatible(spec, u, noise, grid)?;
    let shape = spec.shape();
    let dims = shape.dims;
    let (n, d, l, marks) = (dims.n, dims.d, dims.l, shape.marks);
    let steps = grid.steps();
    let paths = noise.paths();
    let dt = grid.dt();

    let per_path: Vec<Result<Vec<f64>>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut ys = Vec::with_capacity((steps + 1) * n);
            ys.extend_from_slice(spec.x0(p));
            let mut b = vec![0.0; n];
            let mut sigma = vec![0.0; n * d];
            let mut phi = vec![0.0; n * marks];
            for i in 0..steps {
                let y = ys[i * n..(i + 1) * n].to_vec();
                let pt = StatePoint {
                    y: &y,
                    big_y: guess.big_y.get(i, p),
                    z: guess.z.get(i, p),
                    big_z: guess.big_z.get(i, p),
                    k: guess.k.get(i, p),
                };
                let v = u.value(i, &y);
                let ctx = EvalCtx {
                    t: grid.t(i),
                    step: i,
                    path: p,
                };
                spec.coeffs.eval(Coef::Drift, &ctx, &pt, &v, &mut b);
                spec.coeffs.eval(Coef::Diffusion, &ctx, &pt, &v, &mut sigma);
                spec.coeffs.eval(Coef::Jump, &ctx, &pt, &v, &mut phi);
                let dw = noise.dw(i, p);
                let db = noise.db(i, p);
                let z_next = guess.z.get(i + 1, p);
                for a in 0..n {
                    let mut next = y[a] + b[a] * dt;
                    for c in 0..d {
                        next += sigma[a * d + c] * dw[c];
                    }
                    for j in 0..marks {
                        next += phi[a * marks + j] * noise.dn(i, p, j);
                    }
                    for c in 0..l {
                        next -= z_next[a * l + c] * db[c];
                    }
                    if !next.is_finite() {
                        return Err(Error::NonFinite {
                            what: "forward state",
                            step: i + 1,
                            path: p,
                        });
                    }
                    ys.push(next);
                }
            }
            Ok(ys)
        })
        .collect();

    let mut out = PathField::zeros(steps + 1, paths, n);
    for (p, ys) in per_path.into_iter().enumerate() {
        let ys = ys?;
        for i in 0..=steps {
            out.get_mut(i, p).copy_from_slice(&ys[i * n..(i + 1) * n]);
        }
    }
    Ok(out)
}
