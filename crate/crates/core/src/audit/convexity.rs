use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{normal_vec, random_adjoint, random_control, random_state};
use crate::adjoint::eval_hamiltonian;
use crate::model::{EvalCtx, ProblemSpec, StateVec};
use crate::paths::{AdjointPaths, AdjointVec};

/// First-order convexity margins of the terminal and initial costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// `min β(x) − β(x̄) − ⟨β_y(x̄), x − x̄⟩` over samples
    pub terminal_worst_margin: f64,
    /// same for `γ`
    pub initial_worst_margin: f64,
    pub samples: usize,
    pub ok: bool,
}

/// Checks `β(x) − β(x̄) ≥ ⟨β_y(x̄), x − x̄⟩` and the same for `γ` on standard
/// normal pairs.
pub fn check_cost_convexity(spec: &ProblemSpec, samples: usize, seed: u64) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (spec.dims.n, spec.dims.m);
    let cost = &spec.cost;
    let mut worst_t = f64::INFINITY;
    let mut worst_i = f64::INFINITY;
    let mut ok = true;
    for _ in 0..samples.max(1) {
        let (x, xb) = (normal_vec(&mut rng, n, 1.0), normal_vec(&mut rng, n, 1.0));
        let mut g = vec![0.0; n];
        cost.terminal_grad(&xb, &mut g);
        let (fx, fxb) = (cost.terminal(&x), cost.terminal(&xb));
        let lin: f64 = g.iter().zip(x.iter().zip(&xb)).map(|(g, (a, b))| g * (a - b)).sum();
        let margin = fx - fxb - lin;
        worst_t = worst_t.min(margin);
        ok &= margin >= -1e-10 * (1.0 + fx.abs() + fxb.abs());

        let (x, xb) = (normal_vec(&mut rng, m, 1.0), normal_vec(&mut rng, m, 1.0));
        let mut g = vec![0.0; m];
        cost.initial_grad(&xb, &mut g);
        let (fx, fxb) = (cost.initial(&x), cost.initial(&xb));
        let lin: f64 = g.iter().zip(x.iter().zip(&xb)).map(|(g, (a, b))| g * (a - b)).sum();
        let margin = fx - fxb - lin;
        worst_i = worst_i.min(margin);
        ok &= margin >= -1e-10 * (1.0 + fx.abs() + fxb.abs());
    }
    ConvexityReport {
        terminal_worst_margin: worst_t,
        initial_worst_margin: worst_i,
        samples: samples.max(1),
        ok,
    }
}

/// Where the adjoint points of the concavity check come from.
#[derive(Debug, Clone, Copy)]
pub enum AdjointSampler<'a> {
    /// standard normal entries times `scale`
    Random { scale: f64 },
    /// `(node, path)` drawn uniformly from a solved adjoint, with the time of
    /// the node
    Along { adjoint: &'a AdjointPaths, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// `max (H(χ)+H(χ̄))/2 − H((χ+χ̄)/2)` over samples; `≤ 0` when concave
    pub worst_violation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub ok: bool,
}

/// Midpoint concavity of `χ = (ζ, v) ↦ H(t, χ, adjoint)` for each sampled
/// adjoint point. `rel_tol` scales with `1 + |H(χ)| + |H(χ̄)|`.
pub fn check_hamiltonian_concavity(
    spec: &ProblemSpec,
    sampler: AdjointSampler,
    samples: usize,
    seed: u64,
    rel_tol: f64,
) -> ConcavityReport {
    let shape = spec.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for _ in 0..samples.max(1) {
        let (t, adj) = match sampler {
            AdjointSampler::Random { scale } => (rng.random_range(0.0..=spec.horizon), random_adjoint(&mut rng, &shape, scale)),
            AdjointSampler::Along { adjoint, horizon } => {
                let nodes = adjoint.p.nodes();
                let node = rng.random_range(0..nodes);
                let path = rng.random_range(0..adjoint.p.paths());
                let pt = adjoint.point(node, path);
                let owned = AdjointVec {
                    p: pt.p.to_vec(),
                    big_p: pt.big_p.to_vec(),
                    q: pt.q.to_vec(),
                    big_q: pt.big_q.to_vec(),
                    big_v: pt.big_v.to_vec(),
                };
                (horizon * node as f64 / (nodes - 1).max(1) as f64, owned)
            }
        };
        let a = random_state(&mut rng, &shape, 1.0);
        let b = random_state(&mut rng, &shape, 1.0);
        let va = random_control(&mut rng, &spec.controls);
        let vb = random_control(&mut rng, &spec.controls);
        let mid = StateVec::from_flat(
            &shape,
            &a.flatten().iter().zip(b.flatten()).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>(),
        );
        let vm: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| 0.5 * (x + y)).collect();
        let ctx = EvalCtx::at(t);
        let h = |s: &StateVec, v: &[f64]| eval_hamiltonian(spec, &ctx, &s.view(), v, &adj.view());
        let (Ok(ha), Ok(hb), Ok(hm)) = (h(&a, &va), h(&b, &vb), h(&mid, &vm)) else {
            ok = false;
            worst = f64::INFINITY;
            continue;
        };
        let violation = 0.5 * (ha + hb) - hm;
        worst = worst.max(violation);
        ok &= violation <= rel_tol * (1.0 + ha.abs() + hb.abs());
    }
    ConcavityReport {
        worst_violation: worst,
        tolerance: rel_tol,
        samples: samples.max(1),
        ok,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{example31, Quadratic, QuadraticCost};

    #[test]
    fn quadratic_costs_are_convex() {
        let r = check_cost_convexity(&example31(1.0), 500, 1);
        assert!(r.ok);
        assert!(r.terminal_worst_margin >= 0.0 && r.initial_worst_margin >= 0.0);
    }

    #[test]
    fn concave_terminal_cost_fails() {
        let spec = example31(1.0);
        let mut cost = QuadraticCost::zero(spec.shape(), spec.jumps.weights().to_vec());
        cost.terminal = Quadratic::scaled_identity(1, -2.0);
        let spec = spec.with_cost(Arc::new(cost));
        let r = check_cost_convexity(&spec, 100, 2);
        assert!(!r.ok && r.terminal_worst_margin < 0.0);
    }

    #[test]
    fn example_hamiltonian_is_concave() {
        let spec = example31(1.0);
        let r = check_hamiltonian_concavity(&spec, AdjointSampler::Random { scale: 1.0 }, 500, 3, 1e-10);
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn convex_running_cost_breaks_concavity() {
        let spec = example31(1.0);
        let mut cost = QuadraticCost::zero(spec.shape(), spec.jumps.weights().to_vec());
        cost.v = Quadratic::scaled_identity(1, -2.0);
        let spec = spec.with_cost(Arc::new(cost));
        let r = check_hamiltonian_concavity(&spec, AdjointSampler::Random { scale: 1.0 }, 200, 4, 1e-10);
        assert!(!r.ok && r.worst_violation > 0.0);
    }
}
