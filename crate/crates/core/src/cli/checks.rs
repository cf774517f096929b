//! Named pass/fail checks shared by `verify-example`, `identities` and the
//! acceptance suite.

use serde::{Deserialize, Serialize};

use crate::adjoint::solve_adjoint;
use crate::audit::{check_maximum_condition, duality_residuals, DualityReport, MaxConditionOptions, MaxConditionReport};
use crate::error::Result;
use crate::kernel::{check_discrete_product_rule, field_norm, reference_integrand_sets, NoiseBundle, ProductRuleReport, TimeGrid};
use crate::model::{example31, ProblemSpec};
use crate::optimize::{cost_of_paths, CostEstimate};
use crate::paths::{AdjointPaths, PathField, StatePaths};
use crate::solver::{solve_coupled, ControlProcess, PicardOptions, SolveReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// measured quantity; `None` when it could not be computed
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            threshold: Some(threshold),
            pass: value <= threshold,
            detail: format!("{value:.4e} <= {threshold:.4e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            threshold: Some(threshold),
            pass: value >= threshold,
            detail: format!("{value:.4e} >= {threshold:.4e}"),
        }
    }

    pub fn flag(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: None,
            threshold: None,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("[{}] {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// State and adjoint of the closed-form benchmark under a constant control.
pub struct ExampleRun {
    pub x: f64,
    pub spec: ProblemSpec,
    pub grid: TimeGrid,
    pub noise: NoiseBundle,
    pub control: ControlProcess,
    pub state: StatePaths,
    pub state_report: SolveReport,
    /// absent when the state solve did not converge
    pub adjoint: Option<(AdjointPaths, SolveReport)>,
}

pub fn run_example(x: f64, control: f64, steps: usize, paths: usize, seed: u64, solver: &PicardOptions) -> Result<ExampleRun> {
    let spec = example31(x);
    let grid = TimeGrid::new(steps, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, seed)?;
    let u = super::RunConfig::constant_control(&spec, &[control], grid.nodes())?;
    let (state, state_report) = solve_coupled(&spec, &u, &noise, &grid, solver)?;
    let adjoint = if state_report.converged {
        Some(solve_adjoint(&spec, &state, &u, &noise, &grid, solver)?)
    } else {
        None
    };
    Ok(ExampleRun {
        x,
        spec,
        grid,
        noise,
        control: u,
        state,
        state_report,
        adjoint,
    })
}

fn max_std(field: &PathField) -> f64 {
    (0..field.nodes()).flat_map(|i| field.std_at(i)).fold(0.0, f64::max)
}

/// Recovery of `(y, Y, z, Z, k) = (x, x, 0, 0, 0)` under `u ≡ 0`.
pub fn state_checks(run: &ExampleRun, tol: f64) -> Result<Vec<Check>> {
    let x = run.x;
    let s = &run.state;
    let w = run.spec.jumps.weights();
    Ok(vec![
        Check::flag("state solve converged", run.state_report.converged, run.state_report.stop_reason.clone()),
        Check::at_most("sup |y - x|", s.y.sup_distance(|_| vec![x]), tol),
        Check::at_most("sup |Y - x|", s.big_y.sup_distance(|_| vec![x]), tol),
        Check::at_most("norm z", field_norm(&s.z, &run.grid, None)?, tol),
        Check::at_most("norm Z", field_norm(&s.big_z, &run.grid, None)?, tol),
        Check::at_most("norm k", field_norm(&s.k, &run.grid, Some(w))?, tol),
    ])
}

/// Recovery of `p = −x(1+t)`, `P = x(4−t)`, `q = Q = V = 0`.
pub fn adjoint_checks(run: &ExampleRun, tol: f64, std_tol: f64) -> Result<Vec<Check>> {
    let Some((adj, report)) = &run.adjoint else {
        return Ok(vec![Check::flag("adjoint solve converged", false, "state solve did not converge")]);
    };
    let x = run.x;
    let grid = &run.grid;
    let w = run.spec.jumps.weights();
    Ok(vec![
        Check::flag("adjoint solve converged", report.converged, report.stop_reason.clone()),
        Check::at_most("sup |p + x(1+t)|", adj.p.sup_distance(|i| vec![-x * (1.0 + grid.t(i))]), tol),
        Check::at_most("sup |P - x(4-t)|", adj.big_p.sup_distance(|i| vec![x * (4.0 - grid.t(i))]), tol),
        Check::at_most("cross-path std p", max_std(&adj.p), std_tol),
        Check::at_most("cross-path std P", max_std(&adj.big_p), std_tol),
        Check::at_most("norm q", field_norm(&adj.q, grid, None)?, tol),
        Check::at_most("norm Q", field_norm(&adj.big_q, grid, None)?, tol),
        Check::at_most("norm V", field_norm(&adj.big_v, grid, Some(w))?, tol),
    ])
}

/// Cost under `u ≡ 0` against `½(2x² + x² + x²) = 2x²`.
pub fn cost_check(run: &ExampleRun, tol: f64) -> (Check, CostEstimate) {
    let est = cost_of_paths(&run.spec, &run.state, &run.control, &run.grid);
    let target = 2.0 * run.x * run.x;
    let mut check = Check::at_most("|J(0) - 2x^2|", (est.value - target).abs(), tol);
    check.detail = format!("J = {:.6} (SE {:.1e}), target {target}; {}", est.value, est.se, check.detail);
    (check, est)
}

pub fn max_condition_check(run: &ExampleRun, opts: &MaxConditionOptions) -> Result<(Check, Option<MaxConditionReport>)> {
    let Some((adj, _)) = &run.adjoint else {
        return Ok((Check::flag("maximum condition", false, "no adjoint"), None));
    };
    let report = check_maximum_condition(&run.spec, &run.state, adj, &run.control, &run.grid, opts)?;
    let mut check = Check::at_most("max grid H(v) - H(u)", report.worst_gap, opts.tolerance);
    check.detail = format!("{} over {} points; {}", check.detail, report.checked_points, report.grid_points);
    Ok((check, Some(report)))
}

/// The product rule on the reference integrand sets: pathwise telescoping,
/// the expectation form within 3·SE and a negative backward correction.
pub fn product_rule_checks(noise: &NoiseBundle, rel_tol: f64) -> Result<(Vec<Check>, Vec<(String, ProductRuleReport)>)> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (name, a, b) in reference_integrand_sets(noise) {
        let r = check_discrete_product_rule(&a, &b, noise)?;
        checks.push(Check::at_most(&format!("product rule pathwise ({name})"), r.pathwise_max_residual, rel_tol));
        let mut exp = Check::flag(
            &format!("product rule expectation ({name})"),
            r.expectation_ok(),
            format!("{:.3e} within 3 x {:.3e}", r.expectation_residual, r.expectation_se),
        );
        exp.value = Some(r.expectation_residual);
        exp.threshold = Some(3.0 * r.expectation_se);
        checks.push(exp);
        let mut sign = Check::flag(
            &format!("backward correction negative ({name})"),
            r.backward_correction < 0.0,
            format!("{:.4e}", r.backward_correction),
        );
        sign.value = Some(r.backward_correction);
        checks.push(sign);
        reports.push((name.to_string(), r));
    }
    Ok((checks, reports))
}

/// Duality residuals of one reference/perturbed pair on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRun {
    pub steps: usize,
    pub state_u: SolveReport,
    pub adjoint: Option<SolveReport>,
    pub state_v: Option<SolveReport>,
    pub report: Option<DualityReport>,
}

pub fn duality_run(
    spec: &ProblemSpec,
    u: f64,
    v: f64,
    steps: usize,
    paths: usize,
    seed: u64,
    solver: &PicardOptions,
) -> Result<DualityRun> {
    let grid = TimeGrid::new(steps, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, seed)?;
    let cu = super::RunConfig::constant_control(spec, &[u], grid.nodes())?;
    let cv = super::RunConfig::constant_control(spec, &[v], grid.nodes())?;
    let (state_u, rep_u) = solve_coupled(spec, &cu, &noise, &grid, solver)?;
    let mut run = DualityRun {
        steps,
        state_u: rep_u.clone(),
        adjoint: None,
        state_v: None,
        report: None,
    };
    if !rep_u.converged {
        return Ok(run);
    }
    let (adj, rep_a) = solve_adjoint(spec, &state_u, &cu, &noise, &grid, solver)?;
    run.adjoint = Some(rep_a.clone());
    if !rep_a.converged {
        return Ok(run);
    }
    let (state_v, rep_v) = solve_coupled(spec, &cv, &noise, &grid, solver)?;
    run.state_v = Some(rep_v.clone());
    if rep_v.converged {
        run.report = Some(duality_residuals(spec, &state_u, &state_v, &cu, &cv, &adj, &noise, &grid)?);
    }
    Ok(run)
}

fn failure_reason(run: &DualityRun) -> String {
    if !run.state_u.converged {
        format!("reference solve (N = {}): {}", run.steps, run.state_u.stop_reason)
    } else if let Some(a) = run.adjoint.as_ref().filter(|a| !a.converged) {
        format!("adjoint solve (N = {}): {}", run.steps, a.stop_reason)
    } else if let Some(v) = &run.state_v {
        format!("perturbed solve (N = {}): {}", run.steps, v.stop_reason)
    } else {
        "not run".into()
    }
}

/// Coarse/fine duality study. `C` is the smallest constant for which the
/// coarse residuals satisfy `|r| ≤ 3·SE + C·Δt`; the fine run must satisfy
/// the same bound with `Δt/2`, and each residual must shrink by `shrink`.
pub fn duality_checks(coarse: &DualityRun, fine: &DualityRun, horizon: f64, shrink: f64) -> (Vec<Check>, Option<f64>) {
    let (Some(rc), Some(rf)) = (&coarse.report, &fine.report) else {
        let reason = [coarse, fine]
            .iter()
            .filter(|r| r.report.is_none())
            .map(|r| failure_reason(r))
            .collect::<Vec<_>>()
            .join("; ");
        return (vec![Check::flag("duality residuals computed", false, reason)], None);
    };
    let dt_c = horizon / coarse.steps as f64;
    let dt_f = horizon / fine.steps as f64;
    let relations = [
        ("p", rc.residual_p, rc.se_p, rf.residual_p, rf.se_p),
        ("P", rc.residual_big_p, rc.se_big_p, rf.residual_big_p, rf.se_big_p),
    ];
    let c = relations
        .iter()
        .map(|(_, r, se, _, _)| (r.abs() - 3.0 * se).max(0.0) / dt_c)
        .fold(0.0, f64::max);
    let mut checks = Vec::new();
    for (name, r_c, se_c, r_f, se_f) in relations {
        checks.push(Check::at_most(&format!("duality residual {name}, N = {}", coarse.steps), r_c.abs(), 3.0 * se_c + c * dt_c));
        checks.push(Check::at_most(&format!("duality residual {name}, N = {}", fine.steps), r_f.abs(), 3.0 * se_f + c * dt_f));
        let ratio = if r_f == 0.0 { f64::INFINITY } else { r_c.abs() / r_f.abs() };
        checks.push(Check::at_least(&format!("duality residual {name} shrink factor"), ratio, shrink));
    }
    (checks, Some(c))
}
