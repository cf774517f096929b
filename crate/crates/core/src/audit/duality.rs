use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::eval_hamiltonian_gradients;
use crate::error::{Error, Result};
use crate::kernel::{mean_se, NoiseBundle, TimeGrid};
use crate::model::{Coef, EvalCtx, ProblemSpec, StatePoint};
use crate::paths::{AdjointPaths, StatePaths};
use crate::solver::ControlProcess;

/// Monte Carlo estimates of `LHS − RHS` of the two duality relations, for a
/// reference control `u` with its adjoint and a perturbed control `v`.
///
/// The first relation pairs `p` with `ΔY = Y^v − Y`, the second pairs `P`
/// with `Δy`. The adjusted estimates subtract, with a fitted coefficient, the
/// discrete `dW` and `Ñ` integrals of the same pairing, which have mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub residual_p: f64,
    pub se_p: f64,
    pub residual_p_raw: f64,
    pub se_p_raw: f64,
    pub residual_big_p: f64,
    pub se_big_p: f64,
    pub residual_big_p_raw: f64,
    pub se_big_p_raw: f64,
    /// `E⟨cRᵀp_T, Δy_T⟩ − E⟨p_T, ΔY_T⟩`, zero for an affine terminal map
    pub terminal_cancellation: f64,
    pub terminal_cancellation_se: f64,
    /// `J(v) − J(u)` minus the first-order lower bound
    /// `E⟨P_T,Δy_T⟩ + E⟨cRᵀp_T,Δy_T⟩ − E⟨p_0,ΔY_0⟩ + E∫Δℓ`; nonnegative for
    /// convex terminal and initial costs
    pub chain_margin: f64,
    pub chain_margin_se: f64,
    pub paths: usize,
    pub steps: usize,
}

impl DualityReport {
    /// `|residual| ≤ 3·SE + slack` for both relations (adjusted estimates).
    pub fn passes(&self, slack: f64) -> bool {
        self.residual_p.abs() <= 3.0 * self.se_p + slack && self.residual_big_p.abs() <= 3.0 * self.se_big_p + slack
    }

    /// `chain_margin ≥ −3·SE`.
    pub fn chain_holds(&self) -> bool {
        self.chain_margin >= -3.0 * self.chain_margin_se - 1e-12
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `x·ΔW` for a row-major `rows × d` block.
fn times_increment(x: &[f64], inc: &[f64]) -> Vec<f64> {
    let d = inc.len();
    (0..x.len() / d).map(|r| dot(&x[r * d..(r + 1) * d], inc)).collect()
}

/// Column `j` of a row-major `rows × marks` block.
fn mark(x: &[f64], marks: usize, j: usize) -> Vec<f64> {
    (0..x.len() / marks).map(|r| x[r * marks + j]).collect()
}

fn control_variate(samples: &[f64], cv: &[f64]) -> Vec<f64> {
    let (ms, _) = mean_se(samples);
    let (mc, _) = mean_se(cv);
    let cov: f64 = samples.iter().zip(cv).map(|(a, b)| (a - ms) * (b - mc)).sum();
    let var: f64 = cv.iter().map(|b| (b - mc) * (b - mc)).sum();
    let beta = if var > 0.0 { cov / var } else { 0.0 };
    samples.iter().zip(cv).map(|(a, b)| a - beta * b).collect()
}

struct PathTerms {
    r_p: f64,
    cv_p: f64,
    r_big_p: f64,
    cv_big_p: f64,
    cancellation: f64,
    chain: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn duality_residuals(
    spec: &ProblemSpec,
    state_u: &StatePaths,
    state_v: &StatePaths,
    u: &ControlProcess,
    v: &ControlProcess,
    adjoint: &AdjointPaths,
    noise: &NoiseBundle,
    grid: &TimeGrid,
) -> Result<DualityReport> {
    let nodes = grid.nodes();
    let paths = noise.paths();
    if noise.grid() != grid {
        return Err(Error::Validation("noise bundle was sampled on a different grid".into()));
    }
    for (name, n, p) in [
        ("reference state", state_u.nodes(), state_u.paths()),
        ("perturbed state", state_v.nodes(), state_v.paths()),
        ("adjoint", adjoint.p.nodes(), adjoint.p.paths()),
    ] {
        if n != nodes || p != paths {
            return Err(Error::Validation(format!("{name} does not match the grid and noise")));
        }
    }
    let shape = spec.shape();
    let marks = shape.marks;
    let w = spec.jumps.weights();
    let dt = grid.dt();
    let steps = grid.steps();
    let tm = &spec.terminal;

    let eval = |coef: Coef, ctx: &EvalCtx, pt: &StatePoint, c: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; shape.coef_size(coef)];
        spec.coeffs.eval(coef, ctx, pt, c, &mut out);
        out
    };
    let delta = |coef: Coef, ctx: &EvalCtx, a: &StatePoint, ca: &[f64], b: &StatePoint, cb: &[f64]| {
        sub(&eval(coef, ctx, b, cb), &eval(coef, ctx, a, ca))
    };

    let terms: Vec<Result<PathTerms>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut r_p = 0.0;
            let mut cv_p = 0.0;
            let mut r_big_p = 0.0;
            let mut cv_big_p = 0.0;
            let mut running_gap = 0.0;
            for i in 0..=steps {
                let ctx = EvalCtx { t: grid.t(i), step: i, path: p };
                let a = state_u.point(i, p);
                let b = state_v.point(i, p);
                let ua = u.value(i, a.y);
                let vb = v.value(i, b.y);
                let adj = adjoint.point(i, p);
                let grads = eval_hamiltonian_gradients(spec, &ctx, &a, &ua, &adj)?;
                let d_big_y = sub(b.big_y, a.big_y);
                let dy = sub(b.y, a.y);
                if i >= 1 {
                    // backward cross-variations use right-node integrands
                    let dg = delta(Coef::BackwardDiffusion, &ctx, &a, &ua, &b, &vb);
                    r_p += dt * dot(adj.q, &dg);
                    let dz = sub(b.z, a.z);
                    r_big_p -= dt * dot(&grads.h_z, &dz);
                }
                if i == steps {
                    break;
                }
                let df = delta(Coef::Driver, &ctx, &a, &ua, &b, &vb);
                let db = delta(Coef::Drift, &ctx, &a, &ua, &b, &vb);
                let dsigma = delta(Coef::Diffusion, &ctx, &a, &ua, &b, &vb);
                let dphi = delta(Coef::Jump, &ctx, &a, &ua, &b, &vb);
                let d_big_z = sub(b.big_z, a.big_z);
                let dk = sub(b.k, a.k);
                let dw = noise.dw(i, p);

                r_p += dt * (dot(adj.p, &df) - dot(&grads.h_big_y, &d_big_y) - dot(&grads.h_big_z, &d_big_z));
                r_big_p -= dt
                    * (dot(adj.big_p, &db) + dot(&grads.h_y, &dy) + dot(adj.big_q, &dsigma));
                cv_p += dot(adj.p, &times_increment(&d_big_z, dw)) + dot(&d_big_y, &times_increment(&grads.h_big_z, dw));
                cv_big_p += dot(adj.big_p, &times_increment(&dsigma, dw)) + dot(&dy, &times_increment(adj.big_q, dw));
                for j in 0..marks {
                    let hk = mark(&grads.h_k, marks, j);
                    let dkj = mark(&dk, marks, j);
                    let vj = mark(adj.big_v, marks, j);
                    let dphij = mark(&dphi, marks, j);
                    r_p -= dt * w[j] * dot(&hk, &dkj);
                    r_big_p -= dt * w[j] * dot(&vj, &dphij);
                    let dn = noise.dn(i, p, j);
                    cv_p += (dot(adj.p, &dkj) + dot(&d_big_y, &hk)) * dn;
                    cv_big_p += (dot(adj.big_p, &dphij) + dot(&dy, &vj)) * dn;
                }
                running_gap += dt * (spec.cost.running(&ctx, &b, &vb) - spec.cost.running(&ctx, &a, &ua));
            }

            let p0 = adjoint.p.get(0, p);
            let p_n = adjoint.p.get(steps, p);
            let big_p0 = adjoint.big_p.get(0, p);
            let big_pn = adjoint.big_p.get(steps, p);
            let dy0 = sub(state_v.y.get(0, p), state_u.y.get(0, p));
            let dyn_ = sub(state_v.y.get(steps, p), state_u.y.get(steps, p));
            let d_big_y0 = sub(state_v.big_y.get(0, p), state_u.big_y.get(0, p));
            let d_big_yn = sub(state_v.big_y.get(steps, p), state_u.big_y.get(steps, p));

            r_p += -dot(p0, &d_big_y0) + dot(p_n, &d_big_yn);
            r_big_p += dot(big_pn, &dyn_) - dot(big_p0, &dy0);

            let mut rtp = vec![0.0; spec.dims.n];
            tm.apply_rt(p_n, &mut rtp);
            let c_rtp: Vec<f64> = rtp.iter().map(|x| tm.c * x).collect();
            let cancellation = dot(&c_rtp, &dyn_) - dot(p_n, &d_big_yn);

            let cost = &spec.cost;
            let direct = running_gap
                + cost.terminal(state_v.y.get(steps, p))
                - cost.terminal(state_u.y.get(steps, p))
                + cost.initial(state_v.big_y.get(0, p))
                - cost.initial(state_u.big_y.get(0, p));
            let bound = dot(big_pn, &dyn_) + dot(&c_rtp, &dyn_) - dot(p0, &d_big_y0) + running_gap;
            Ok(PathTerms {
                r_p,
                cv_p,
                r_big_p,
                cv_big_p,
                cancellation,
                chain: direct - bound,
            })
        })
        .collect();
    let terms: Vec<PathTerms> = terms.into_iter().collect::<Result<_>>()?;

    let col = |f: fn(&PathTerms) -> f64| terms.iter().map(f).collect::<Vec<_>>();
    let (r_p, cv_p, r_big_p, cv_big_p) = (col(|t| t.r_p), col(|t| t.cv_p), col(|t| t.r_big_p), col(|t| t.cv_big_p));
    let (raw_p, raw_p_se) = mean_se(&r_p);
    let (adj_p, adj_p_se) = mean_se(&control_variate(&r_p, &cv_p));
    let (raw_bp, raw_bp_se) = mean_se(&r_big_p);
    let (adj_bp, adj_bp_se) = mean_se(&control_variate(&r_big_p, &cv_big_p));
    let (canc, canc_se) = mean_se(&col(|t| t.cancellation));
    let (chain, chain_se) = mean_se(&col(|t| t.chain));
    let report = DualityReport {
        residual_p: adj_p,
        se_p: adj_p_se,
        residual_p_raw: raw_p,
        se_p_raw: raw_p_se,
        residual_big_p: adj_bp,
        se_big_p: adj_bp_se,
        residual_big_p_raw: raw_bp,
        se_big_p_raw: raw_bp_se,
        terminal_cancellation: canc,
        terminal_cancellation_se: canc_se,
        chain_margin: chain,
        chain_margin_se: chain_se,
        paths,
        steps,
    };
    if [report.residual_p, report.residual_big_p, report.chain_margin].iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "duality residual",
            step: steps,
            path: 0,
        });
    }
    Ok(report)
}
