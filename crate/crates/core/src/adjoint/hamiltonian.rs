use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fd_step, Arg, Coef, EvalCtx, ProblemSpec, Shape, StatePoint};
use crate::paths::AdjointPoint;

/// Gradients of the Hamiltonian in every argument block.
///
/// `h_k` holds per-mark density values: entry `(a, j)` is the derivative with
/// respect to `k_a(ρ_j)` divided by the mark weight `w_j`, so that
/// `Σ_j w_j h_k(ρ_j)·δk(ρ_j)` is the first-order change of `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianGradients {
    pub h_y: Vec<f64>,
    pub h_big_y: Vec<f64>,
    pub h_z: Vec<f64>,
    pub h_big_z: Vec<f64>,
    pub h_k: Vec<f64>,
    pub h_v: Vec<f64>,
}

impl HamiltonianGradients {
    pub fn block(&self, arg: Arg) -> &[f64] {
        match arg {
            Arg::Y => &self.h_y,
            Arg::BigY => &self.h_big_y,
            Arg::Z => &self.h_z,
            Arg::BigZ => &self.h_big_z,
            Arg::K => &self.h_k,
            Arg::V => &self.h_v,
        }
    }
}

fn check_shapes(shape: &Shape, pt: &StatePoint, v: &[f64], adj: &AdjointPoint) -> Result<()> {
    let d = shape.dims;
    for arg in Arg::STATE {
        let expected = shape.arg_size(arg);
        if pt.block(arg).len() != expected {
            return Err(Error::shape(format!("state block {}", arg.label()), expected, pt.block(arg).len()));
        }
    }
    if v.len() != d.r {
        return Err(Error::shape("control", d.r, v.len()));
    }
    let blocks = [
        ("adjoint p", adj.p.len(), d.m),
        ("adjoint P", adj.big_p.len(), d.n),
        ("adjoint q", adj.q.len(), d.m * d.l),
        ("adjoint Q", adj.big_q.len(), d.n * d.d),
        ("adjoint V", adj.big_v.len(), d.n * shape.marks),
    ];
    for (name, actual, expected) in blocks {
        if actual != expected {
            return Err(Error::shape(name, expected, actual));
        }
    }
    Ok(())
}

/// The signed weights that pair each coefficient with the adjoint point.
fn pairing(coef: Coef, adj: &AdjointPoint, weights: &[f64]) -> Vec<f64> {
    match coef {
        Coef::Driver => adj.p.to_vec(),
        Coef::Drift => adj.big_p.iter().map(|x| -x).collect(),
        Coef::BackwardDiffusion => adj.q.to_vec(),
        Coef::Diffusion => adj.big_q.iter().map(|x| -x).collect(),
        Coef::Jump => {
            let marks = weights.len();
            adj.big_v
                .iter()
                .enumerate()
                .map(|(idx, x)| -weights[idx % marks] * x)
                .collect()
        }
    }
}

fn non_finite(ctx: &EvalCtx) -> Error {
    Error::NonFinite {
        what: "Hamiltonian",
        step: ctx.step,
        path: ctx.path,
    }
}

/// `H = ⟨p,f⟩ − ⟨P,b⟩ + ⟨q,g⟩ − ⟨Q,σ⟩ − ℓ − Σ_j w_j⟨V(ρ_j), φ(ρ_j)⟩`.
pub fn eval_hamiltonian(
    spec: &ProblemSpec,
    ctx: &EvalCtx,
    pt: &StatePoint,
    v: &[f64],
    adj: &AdjointPoint,
) -> Result<f64> {
    let shape = spec.shape();
    check_shapes(&shape, pt, v, adj)?;
    let weights = spec.jumps.weights();
    let mut h = -spec.cost.running(ctx, pt, v);
    for coef in Coef::ALL {
        let mut out = vec![0.0; shape.coef_size(coef)];
        spec.coeffs.eval(coef, ctx, pt, v, &mut out);
        let w = pairing(coef, adj, weights);
        h += out.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    }
    if !h.is_finite() {
        return Err(non_finite(ctx));
    }
    Ok(h)
}

/// Gradient of `H` in one block, assembled from the coefficient Jacobians.
/// For `Arg::K` the result is the per-mark density (see
/// [`HamiltonianGradients`]).
pub fn hamiltonian_gradient(
    spec: &ProblemSpec,
    arg: Arg,
    ctx: &EvalCtx,
    pt: &StatePoint,
    v: &[f64],
    adj: &AdjointPoint,
    out: &mut [f64],
) -> Result<()> {
    let shape = spec.shape();
    let cols = shape.arg_size(arg);
    if out.len() != cols {
        return Err(Error::shape(format!("gradient block {}", arg.label()), cols, out.len()));
    }
    let weights = spec.jumps.weights();
    spec.cost.running_grad(arg, ctx, pt, v, out);
    for o in out.iter_mut() {
        *o = -*o;
    }
    let mut jac = Vec::new();
    for coef in Coef::ALL {
        let rows = shape.coef_size(coef);
        jac.clear();
        jac.resize(rows * cols, 0.0);
        spec.coeffs.jacobian(coef, arg, ctx, pt, v, &mut jac);
        let w = pairing(coef, adj, weights);
        for (row, wr) in w.iter().enumerate() {
            if *wr == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += wr * jac[row * cols + c];
            }
        }
    }
    if arg == Arg::K {
        let marks = weights.len();
        for (idx, o) in out.iter_mut().enumerate() {
            *o /= weights[idx % marks];
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(non_finite(ctx));
    }
    Ok(())
}

pub fn eval_hamiltonian_gradients(
    spec: &ProblemSpec,
    ctx: &EvalCtx,
    pt: &StatePoint,
    v: &[f64],
    adj: &AdjointPoint,
) -> Result<HamiltonianGradients> {
    let shape = spec.shape();
    check_shapes(&shape, pt, v, adj)?;
    let block = |arg: Arg| -> Result<Vec<f64>> {
        let mut out = vec![0.0; shape.arg_size(arg)];
        hamiltonian_gradient(spec, arg, ctx, pt, v, adj, &mut out)?;
        Ok(out)
    };
    Ok(HamiltonianGradients {
        h_y: block(Arg::Y)?,
        h_big_y: block(Arg::BigY)?,
        h_z: block(Arg::Z)?,
        h_big_z: block(Arg::BigZ)?,
        h_k: block(Arg::K)?,
        h_v: block(Arg::V)?,
    })
}

/// Largest relative gap `|fd − g| / max(1, |g|)` between the assembled
/// gradients `g` and central differences `fd` of [`eval_hamiltonian`], over
/// every entry of every block. The `k` block is compared as a density, like
/// [`HamiltonianGradients`].
pub fn gradient_fd_discrepancy(
    spec: &ProblemSpec,
    ctx: &EvalCtx,
    pt: &StatePoint,
    v: &[f64],
    adj: &AdjointPoint,
) -> Result<f64> {
    let grads = eval_hamiltonian_gradients(spec, ctx, pt, v, adj)?;
    let weights = spec.jumps.weights();
    let marks = weights.len();
    let mut worst: f64 = 0.0;
    for arg in Arg::ALL {
        for (idx, analytic) in grads.block(arg).iter().enumerate() {
            let mut up = pt.to_owned();
            let mut dn = pt.to_owned();
            let mut v_up = v.to_vec();
            let mut v_dn = v.to_vec();
            let h = if arg == Arg::V {
                let h = fd_step(v[idx]);
                v_up[idx] += h;
                v_dn[idx] -= h;
                h
            } else {
                let h = fd_step(up.block_mut(arg)[idx]);
                up.block_mut(arg)[idx] += h;
                dn.block_mut(arg)[idx] -= h;
                h
            };
            let mut fd = (eval_hamiltonian(spec, ctx, &up.view(), &v_up, adj)?
                - eval_hamiltonian(spec, ctx, &dn.view(), &v_dn, adj)?)
                / (2.0 * h);
            if arg == Arg::K {
                fd /= weights[idx % marks];
            }
            worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example31;
    use crate::paths::AdjointVec;

    fn example_point(t: f64, v: f64) -> (ProblemSpec, Vec<f64>, AdjointVec, Vec<f64>) {
        let spec = example31(1.0);
        let marks = spec.jumps.len();
        let mut adj = AdjointVec::zeros(&spec.shape());
        adj.p[0] = -(1.0 + t);
        adj.big_p[0] = 4.0 - t;
        let mut state = vec![1.0, 1.0, 0.0, 0.0];
        state.extend(vec![0.0; marks]);
        (spec, state, adj, vec![v])
    }

    #[test]
    fn closed_form_value_along_the_solution() {
        for (t, v, expected) in [(0.3, 0.0, -1.0), (0.3, 0.5, -1.125), (0.8, -1.0, -1.5)] {
            let (spec, flat, adj, v) = example_point(t, v);
            let pt = crate::model::StateVec::from_flat(&spec.shape(), &flat);
            let h = eval_hamiltonian(&spec, &EvalCtx::at(t), &pt.view(), &v, &adj.view()).unwrap();
            assert!((h - expected).abs() < 1e-12, "t={t}: {h} vs {expected}");
        }
    }

    #[test]
    fn control_gradient_is_minus_v() {
        let (spec, flat, adj, v) = example_point(0.4, 0.25);
        let pt = crate::model::StateVec::from_flat(&spec.shape(), &flat);
        let g = eval_hamiltonian_gradients(&spec, &EvalCtx::at(0.4), &pt.view(), &v, &adj.view()).unwrap();
        assert!((g.h_v[0] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn forward_loading_gradient_matches_closed_form() {
        let spec = example31(1.0);
        let shape = spec.shape();
        let mut adj = AdjointVec::zeros(&shape);
        adj.q[0] = 0.7;
        adj.big_q[0] = -0.2;
        let mut pt = crate::model::StateVec::zeros(&shape);
        pt.big_z[0] = 0.4;
        let g = eval_hamiltonian_gradients(&spec, &EvalCtx::at(0.5), &pt.view(), &[0.1], &adj.view()).unwrap();
        assert!((g.h_big_z[0] - (1.5 * 0.7 + 0.2 - 0.4)).abs() < 1e-12);
        for (j, hk) in g.h_k.iter().enumerate() {
            let expected = 1.5 * 0.7 + 0.2 - pt.k[j];
            assert!((hk - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (spec, flat, adj, _) = example_point(0.0, 0.0);
        let pt = crate::model::StateVec::from_flat(&spec.shape(), &flat);
        let err = eval_hamiltonian(&spec, &EvalCtx::at(0.0), &pt.view(), &[0.0, 1.0], &adj.view());
        assert!(matches!(err, Err(Error::Shape { .. })));
    }
}
