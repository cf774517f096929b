use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::convexity::{check_cost_convexity, check_hamiltonian_concavity, AdjointSampler, ConcavityReport, ConvexityReport};
use super::duality::{duality_residuals, DualityReport};
use super::maximum::{check_maximum_condition, MaxConditionOptions, MaxConditionReport};
use super::monotonicity::{audit_monotonicity, MonotonicityReport, Regime};
use super::sampling::{random_control, random_state};
use crate::adjoint::{hamiltonian_gradient, solve_adjoint};
use crate::error::Result;
use crate::kernel::{mean_se, NoiseBundle, TimeGrid};
use crate::model::{Arg, Coef, EvalCtx, ProblemSpec};
use crate::optimize::cost_components;
use crate::paths::{AdjointPaths, StatePaths};
use crate::solver::{solve_coupled, ControlProcess, PicardOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    pub solver: PicardOptions,
    pub seed: u64,
    pub convexity_samples: usize,
    pub concavity_samples: usize,
    pub monotonicity_samples: usize,
    pub regularity_samples: usize,
    pub max_condition: MaxConditionOptions,
    /// duality relations pass when `|residual| ≤ 3·SE + duality_slack·Δt`
    pub duality_slack: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            solver: PicardOptions::default(),
            seed: 0,
            convexity_samples: 1000,
            concavity_samples: 1000,
            monotonicity_samples: 10_000,
            regularity_samples: 200,
            max_condition: MaxConditionOptions::default(),
            duality_slack: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    Certified,
    NotCertified,
    Inconclusive,
}

/// Spot check of the derivative bounds: the largest coefficient Jacobian
/// entry seen at random probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub max_jacobian_entry: f64,
    pub all_finite: bool,
    pub samples: usize,
}

pub fn probe_regularity(spec: &ProblemSpec, samples: usize, seed: u64) -> RegularityReport {
    let shape = spec.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for _ in 0..samples.max(1) {
        let t = rng.random_range(0.0..=spec.horizon);
        let pt = random_state(&mut rng, &shape, 3.0);
        let v = random_control(&mut rng, &spec.controls);
        for coef in Coef::ALL {
            for arg in Arg::ALL {
                let mut jac = vec![0.0; shape.coef_size(coef) * shape.arg_size(arg)];
                spec.coeffs.jacobian(coef, arg, &EvalCtx::at(t), &pt.view(), &v, &mut jac);
                for x in jac {
                    finite &= x.is_finite();
                    worst = worst.max(x.abs());
                }
            }
        }
    }
    RegularityReport {
        max_jacobian_entry: worst,
        all_finite: finite,
        samples: samples.max(1),
    }
}

/// Outcome for one probe control `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub label: String,
    pub solved: bool,
    pub solver: SolveReport,
    pub duality: Option<DualityReport>,
    pub duality_ok: Option<bool>,
    /// `−E∫⟨H_v, v − u⟩dt` along the reference solution
    pub lower_bound: Option<f64>,
    pub lower_bound_se: Option<f64>,
    /// `J(v) − J(u)` under common random numbers
    pub direct_gap: Option<f64>,
    pub direct_gap_se: Option<f64>,
    pub gap_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityVerdict {
    pub problem: String,
    pub state_solver: SolveReport,
    pub adjoint_solver: Option<SolveReport>,
    pub convexity: ConvexityReport,
    pub concavity: Option<ConcavityReport>,
    pub max_condition: Option<MaxConditionReport>,
    pub monotonicity: MonotonicityReport,
    pub regularity: RegularityReport,
    pub probes: Vec<ProbeOutcome>,
    pub convexity_ok: bool,
    pub concavity_ok: bool,
    pub max_condition_ok: bool,
    pub duality_pass: bool,
    /// lower bound of `J(v) − J(u)` per probe, in probe order
    pub gap_estimate: Vec<Option<f64>>,
    pub overall: Overall,
    pub reasons: Vec<String>,
    pub warnings: Vec<String>,
}

/// Samples of `−Σ_i ⟨H_v, v_i − u_i⟩Δt` per path.
fn lower_bound_samples(
    spec: &ProblemSpec,
    state_u: &StatePaths,
    state_v: &StatePaths,
    adjoint: &AdjointPaths,
    u: &ControlProcess,
    v: &ControlProcess,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let r = spec.dims.r;
    (0..state_u.paths())
        .into_par_iter()
        .map(|p| {
            let mut total = 0.0;
            for i in 0..grid.steps() {
                let pt = state_u.point(i, p);
                let ctx = EvalCtx { t: grid.t(i), step: i, path: p };
                let ui = u.value(i, pt.y);
                let vi = v.value(i, state_v.y.get(i, p));
                let mut hv = vec![0.0; r];
                hamiltonian_gradient(spec, Arg::V, &ctx, &pt, &ui, &adjoint.point(i, p), &mut hv)?;
                total -= grid.dt() * hv.iter().zip(vi.iter().zip(&ui)).map(|(h, (a, b))| h * (a - b)).sum::<f64>();
            }
            Ok(total)
        })
        .collect()
}

/// Runs conditions (i)–(iii), the duality relations and the first-order gap
/// bound against every probe, and combines them into a verdict.
///
/// `overall` is certified exactly when (i), (ii), (iii) and the duality
/// relations pass and every direct gap clears its lower bound. A failed
/// condition gives not-certified; a probe or reference solve that does not
/// converge, with nothing else failing, gives inconclusive.
pub fn sufficiency_verdict(
    spec: &ProblemSpec,
    u: &ControlProcess,
    probes: &[(String, ControlProcess)],
    noise: &NoiseBundle,
    grid: &TimeGrid,
    opts: &VerdictOptions,
) -> Result<OptimalityVerdict> {
    let mut reasons = Vec::new();
    let mut warnings = Vec::new();
    let convexity = check_cost_convexity(spec, opts.convexity_samples, opts.seed);
    let monotonicity = audit_monotonicity(spec, opts.monotonicity_samples, opts.seed.wrapping_add(1));
    let regularity = probe_regularity(spec, opts.regularity_samples, opts.seed.wrapping_add(2));
    if !regularity.all_finite {
        warnings.push("non-finite coefficient derivative at a random probe".into());
    }
    if !convexity.ok {
        reasons.push(format!(
            "terminal or initial cost is not convex (worst margins {:.3e}, {:.3e})",
            convexity.terminal_worst_margin, convexity.initial_worst_margin
        ));
    }

    let (state, state_report) = solve_coupled(spec, u, noise, grid, &opts.solver)?;
    let mut verdict = OptimalityVerdict {
        problem: spec.name.clone(),
        state_solver: state_report.clone(),
        adjoint_solver: None,
        convexity_ok: convexity.ok,
        convexity,
        concavity: None,
        max_condition: None,
        monotonicity,
        regularity,
        probes: Vec::new(),
        concavity_ok: false,
        max_condition_ok: false,
        duality_pass: false,
        gap_estimate: Vec::new(),
        overall: Overall::Inconclusive,
        reasons: Vec::new(),
        warnings: Vec::new(),
    };
    match verdict.monotonicity.regime {
        Regime::A1 | Regime::A1Prime => {}
        other if state_report.converged => warnings.push(format!(
            "monotonicity regime is {}; the solver converged regardless",
            other.label()
        )),
        other => warnings.push(format!("monotonicity regime is {}", other.label())),
    }
    if !state_report.converged {
        reasons.push(format!("reference state solve did not converge: {}", state_report.stop_reason));
        verdict.overall = if verdict.convexity_ok { Overall::Inconclusive } else { Overall::NotCertified };
        verdict.reasons = reasons;
        verdict.warnings = warnings;
        return Ok(verdict);
    }

    let (adjoint, adjoint_report) = solve_adjoint(spec, &state, u, noise, grid, &opts.solver)?;
    verdict.adjoint_solver = Some(adjoint_report.clone());
    if !adjoint_report.converged {
        reasons.push(format!("adjoint solve did not converge: {}", adjoint_report.stop_reason));
        verdict.overall = if verdict.convexity_ok { Overall::Inconclusive } else { Overall::NotCertified };
        verdict.reasons = reasons;
        verdict.warnings = warnings;
        return Ok(verdict);
    }

    let concavity = check_hamiltonian_concavity(
        spec,
        AdjointSampler::Along {
            adjoint: &adjoint,
            horizon: spec.horizon,
        },
        opts.concavity_samples,
        opts.seed.wrapping_add(3),
        1e-10,
    );
    verdict.concavity_ok = concavity.ok;
    if !concavity.ok {
        reasons.push(format!("Hamiltonian is not concave (worst midpoint violation {:.3e})", concavity.worst_violation));
    }
    verdict.concavity = Some(concavity);
    let max_condition = check_maximum_condition(spec, &state, &adjoint, u, grid, &opts.max_condition)?;
    verdict.max_condition_ok = max_condition.ok;
    if !max_condition.ok {
        reasons.push(format!(
            "maximum condition fails: grid gap {:.3e} at node {}, path {}",
            max_condition.worst_gap, max_condition.worst_node, max_condition.worst_path
        ));
    }
    verdict.max_condition = Some(max_condition);

    let base_costs: Vec<f64> = cost_components(spec, &state, u, grid).iter().map(|c| c.iter().sum()).collect();
    let mut duality_pass = true;
    let mut probes_ok = true;
    let mut probes_unsolved = false;
    for (label, v) in probes {
        let (state_v, rep_v) = solve_coupled(spec, v, noise, grid, &opts.solver)?;
        let mut outcome = ProbeOutcome {
            label: label.clone(),
            solved: rep_v.converged,
            solver: rep_v.clone(),
            duality: None,
            duality_ok: None,
            lower_bound: None,
            lower_bound_se: None,
            direct_gap: None,
            direct_gap_se: None,
            gap_ok: None,
        };
        if !rep_v.converged {
            probes_unsolved = true;
            duality_pass = false;
            reasons.push(format!("probe {label}: state solve did not converge ({})", rep_v.stop_reason));
            verdict.gap_estimate.push(None);
            verdict.probes.push(outcome);
            continue;
        }
        let duality = duality_residuals(spec, &state, &state_v, u, v, &adjoint, noise, grid)?;
        let ok = duality.passes(opts.duality_slack * grid.dt());
        if !ok {
            duality_pass = false;
            reasons.push(format!(
                "probe {label}: duality residuals {:.3e} (SE {:.1e}), {:.3e} (SE {:.1e})",
                duality.residual_p, duality.se_p, duality.residual_big_p, duality.se_big_p
            ));
        }
        let bound = lower_bound_samples(spec, &state, &state_v, &adjoint, u, v, grid)?;
        let probe_costs: Vec<f64> = cost_components(spec, &state_v, v, grid).iter().map(|c| c.iter().sum()).collect();
        let diffs: Vec<f64> = probe_costs.iter().zip(&base_costs).map(|(a, b)| a - b).collect();
        let (gap, gap_se) = mean_se(&diffs);
        let (lb, lb_se) = mean_se(&bound);
        let gap_ok = gap >= lb - 3.0 * (gap_se * gap_se + lb_se * lb_se).sqrt() - 1e-9;
        if !gap_ok {
            probes_ok = false;
            reasons.push(format!("probe {label}: direct gap {gap:.4e} below the lower bound {lb:.4e}"));
        }
        outcome.duality = Some(duality);
        outcome.duality_ok = Some(ok);
        outcome.lower_bound = Some(lb);
        outcome.lower_bound_se = Some(lb_se);
        outcome.direct_gap = Some(gap);
        outcome.direct_gap_se = Some(gap_se);
        outcome.gap_ok = Some(gap_ok);
        verdict.gap_estimate.push(Some(lb));
        verdict.probes.push(outcome);
    }
    verdict.duality_pass = duality_pass;

    let conditions = verdict.convexity_ok && verdict.concavity_ok && verdict.max_condition_ok;
    let solved_duality_failed = verdict.probes.iter().any(|p| p.duality_ok == Some(false));
    verdict.overall = if conditions && duality_pass && probes_ok {
        Overall::Certified
    } else if !conditions || solved_duality_failed || !probes_ok {
        Overall::NotCertified
    } else if probes_unsolved {
        Overall::Inconclusive
    } else {
        Overall::NotCertified
    };
    verdict.reasons = reasons;
    verdict.warnings = warnings;
    Ok(verdict)
}
