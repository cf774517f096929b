use std::sync::Arc;

use super::hamiltonian::hamiltonian_gradient;
use crate::error::{Error, Result};
use crate::model::{
    Arg, Coef, Coefficients, ControlSet, Dimensions, EvalCtx, InitialState, ProblemSpec, Shape,
    StatePoint, TerminalMap, TerminalShift, ZeroCost,
};
use crate::paths::{AdjointPoint, StatePaths};
use crate::solver::ControlProcess;

/// The adjoint system written in the layout of the state system: `p` sits in
/// the forward slot, `P` in the backward slot, and
///
/// ```text
/// b' = H_Y    σ' = H_Z    φ'(ρ_j) = H_k(ρ_j)    f' = −H_y    g' = −H_z
/// ```
///
/// with `H` frozen along a solved state trajectory and its control. The
/// `dB̄` integrand `q`, the `dW` integrand `Q` and the jump integrand `V` are
/// the mirrored system's `z`, `Z` and `k`.
pub struct MirroredCoefficients {
    base: ProblemSpec,
    state: Arc<StatePaths>,
    control: ControlProcess,
    shape: Shape,
}

impl MirroredCoefficients {
    fn gradient_arg(coef: Coef) -> (Arg, f64) {
        match coef {
            Coef::Drift => (Arg::BigY, 1.0),
            Coef::Diffusion => (Arg::BigZ, 1.0),
            Coef::Jump => (Arg::K, 1.0),
            Coef::Driver => (Arg::Y, -1.0),
            Coef::BackwardDiffusion => (Arg::Z, -1.0),
        }
    }
}

impl Coefficients for MirroredCoefficients {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn eval(&self, coef: Coef, ctx: &EvalCtx, pt: &StatePoint, _v: &[f64], out: &mut [f64]) {
        let adj = AdjointPoint {
            p: pt.y,
            big_p: pt.big_y,
            q: pt.z,
            big_q: pt.big_z,
            big_v: pt.k,
        };
        let state = self.state.point(ctx.step, ctx.path);
        let u = self.control.value(ctx.step, state.y);
        let (arg, sign) = Self::gradient_arg(coef);
        if hamiltonian_gradient(&self.base, arg, ctx, &state, &u, &adj, out).is_err() {
            out.fill(f64::NAN);
            return;
        }
        if sign < 0.0 {
            for o in out.iter_mut() {
                *o = -*o;
            }
        }
    }

    /// Exact for this system, which is affine in the adjoint unknowns.
    fn jacobian(&self, coef: Coef, arg: Arg, ctx: &EvalCtx, pt: &StatePoint, v: &[f64], out: &mut [f64]) {
        let rows = self.shape.coef_size(coef);
        let cols = self.shape.arg_size(arg);
        if arg == Arg::V {
            out.fill(0.0);
            return;
        }
        let mut point = pt.to_owned();
        point.block_mut(arg).fill(0.0);
        let mut base = vec![0.0; rows];
        self.eval(coef, ctx, &point.view(), v, &mut base);
        let mut col_out = vec![0.0; rows];
        for c in 0..cols {
            point.block_mut(arg)[c] = 1.0;
            self.eval(coef, ctx, &point.view(), v, &mut col_out);
            point.block_mut(arg)[c] = 0.0;
            for r in 0..rows {
                out[r * cols + c] = col_out[r] - base[r];
            }
        }
    }
}

/// Control set and process of an assembled adjoint system, which has no
/// control of its own.
pub fn adjoint_control(nodes: usize) -> ControlProcess {
    ControlProcess::constant(&ControlSet::Point(vec![0.0]), &[0.0], nodes)
}

/// Builds the adjoint system of `spec` along the solved `state` under `u`, as
/// a problem the coupled solver accepts: dimensions `n' = m`, `m' = n`,
/// initial value `p_0 = −γ_Y(Y_0)` and terminal map
/// `P_T = −c·Rᵀp_T + β_y(y_T)`, both per path.
pub fn assemble_adjoint_coefficients(
    spec: &ProblemSpec,
    state: &StatePaths,
    u: &ControlProcess,
) -> Result<ProblemSpec> {
    let dims = spec.dims;
    let shape = spec.shape();
    let nodes = state.nodes();
    let paths = state.paths();
    if nodes < 2 {
        return Err(Error::Validation("state trajectory needs at least two nodes".into()));
    }
    u.check(nodes, dims.r)?;
    for (field, arg) in state.fields().into_iter().zip(Arg::STATE) {
        if field.width() != shape.arg_size(arg) || field.nodes() != nodes || field.paths() != paths {
            return Err(Error::shape(
                format!("state block {}", arg.label()),
                nodes * paths * shape.arg_size(arg),
                field.as_slice().len(),
            ));
        }
    }

    let mirrored_dims = Dimensions::new(dims.m, dims.n, dims.l, dims.d, 1)?;
    let mirrored_shape = mirrored_dims.shape(spec.jumps.len());

    let last = nodes - 1;
    let mut p0 = Vec::with_capacity(paths);
    let mut xi = Vec::with_capacity(paths);
    for path in 0..paths {
        let mut g = vec![0.0; dims.m];
        spec.cost.initial_grad(state.big_y.get(0, path), &mut g);
        p0.push(g.iter().map(|x| -x).collect::<Vec<_>>());
        let mut b = vec![0.0; dims.n];
        spec.cost.terminal_grad(state.y.get(last, path), &mut b);
        xi.push(b);
    }
    let (rows, cols) = (spec.terminal.rows, spec.terminal.cols);
    let rt: Vec<f64> = (0..cols)
        .flat_map(|j| (0..rows).map(move |i| (i, j)))
        .map(|(i, j)| spec.terminal.r[i * cols + j])
        .collect();
    let terminal = TerminalMap::new(-spec.terminal.c, rt, cols, rows, TerminalShift::PerPath(xi))?;

    let coeffs = MirroredCoefficients {
        base: spec.clone(),
        state: Arc::new(state.clone()),
        control: u.clone(),
        shape: mirrored_shape,
    };
    Ok(ProblemSpec {
        name: format!("{}-adjoint", spec.name),
        dims: mirrored_dims,
        jumps: spec.jumps.clone(),
        coeffs: Arc::new(coeffs),
        cost: Arc::new(ZeroCost),
        terminal,
        controls: ControlSet::Point(vec![0.0]),
        initial: InitialState::PerPath(p0),
        horizon: spec.horizon,
        features: Some(Arc::new(state.y.clone())),
    })
}
