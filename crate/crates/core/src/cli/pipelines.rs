use serde::Serialize;

use super::checks::{
    adjoint_checks, all_pass, cost_check, duality_checks, duality_run, max_condition_check, product_rule_checks,
    run_example, state_checks, Check, DualityRun,
};
use super::config::{CommandKind, RunConfig};
use super::output::Artifact;
use crate::adjoint::solve_adjoint;
use crate::audit::{sufficiency_verdict, OptimalityVerdict, Overall};
use crate::error::Result;
use crate::kernel::{field_norm, NoiseBundle, ProductRuleReport, TimeGrid};
use crate::model::{catalog_lookup, ProblemSpec};
use crate::optimize::{cost_of_paths, optimize_control, CostEstimate};
use crate::paths::{PathField, StatePaths};
use crate::solver::{solve_coupled, write_paths_csv, ControlProcess, SolveReport};

/// Result of a pipeline: files to write, lines for the terminal and whether
/// the run's own success condition held.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
    pub passed: bool,
}

pub fn run_pipeline(config: &RunConfig) -> Result<Outcome> {
    match config.command {
        CommandKind::Solve => solve(config),
        CommandKind::Adjoint => adjoint(config),
        CommandKind::Audit => audit(config),
        CommandKind::Optimize => optimize(config),
        CommandKind::VerifyExample => verify_example(config),
        CommandKind::Identities => identities(config),
    }
}

struct Setup {
    spec: ProblemSpec,
    grid: TimeGrid,
    noise: NoiseBundle,
    u: ControlProcess,
}

fn setup(config: &RunConfig) -> Result<Setup> {
    let spec = config.problem()?;
    let grid = config.grid(&spec)?;
    let noise = config.noise(&spec, &grid)?;
    let u = RunConfig::constant_control(&spec, &config.control, grid.nodes())?;
    Ok(Setup { spec, grid, noise, u })
}

fn csv(name: &str, grid: &TimeGrid, fields: &[(&str, &PathField)]) -> Result<Artifact> {
    let mut bytes = Vec::new();
    write_paths_csv(&mut bytes, grid, fields)?;
    Ok(Artifact::raw(name, bytes))
}

fn state_csv(grid: &TimeGrid, s: &StatePaths) -> Result<Artifact> {
    csv("state.csv", grid, &[("y", &s.y), ("Y", &s.big_y), ("z", &s.z), ("Z", &s.big_z), ("k", &s.k)])
}

#[derive(Serialize)]
struct NodeSummary {
    node: usize,
    t: f64,
    mean: Vec<f64>,
    std: Vec<f64>,
}

fn node_summary(field: &PathField, grid: &TimeGrid) -> Vec<NodeSummary> {
    (0..field.nodes())
        .map(|i| NodeSummary {
            node: i,
            t: grid.t(i),
            mean: field.mean_at(i),
            std: field.std_at(i),
        })
        .collect()
}

#[derive(Serialize)]
struct SolveOutput {
    problem: String,
    steps: usize,
    paths: usize,
    seed: u64,
    solver: SolveReport,
    cost: CostEstimate,
    norms: [f64; 3],
    y: Vec<NodeSummary>,
    #[serde(rename = "Y")]
    big_y: Vec<NodeSummary>,
}

fn solve(config: &RunConfig) -> Result<Outcome> {
    let s = setup(config)?;
    let (state, report) = solve_coupled(&s.spec, &s.u, &s.noise, &s.grid, &config.solver)?;
    let w = s.spec.jumps.weights();
    let out = SolveOutput {
        problem: s.spec.name.clone(),
        steps: config.steps,
        paths: config.paths,
        seed: config.seed,
        cost: cost_of_paths(&s.spec, &state, &s.u, &s.grid),
        norms: [
            field_norm(&state.z, &s.grid, None)?,
            field_norm(&state.big_z, &s.grid, None)?,
            field_norm(&state.k, &s.grid, Some(w))?,
        ],
        y: node_summary(&state.y, &s.grid),
        big_y: node_summary(&state.big_y, &s.grid),
        solver: report.clone(),
    };
    let summary = vec![
        format!("{}: {} after {} iterations", s.spec.name, verdict_word(report.converged), report.iterations),
        format!("Y_0 mean {:?}, Y_N mean {:?}", out.big_y[0].mean, out.big_y[config.steps].mean),
        format!("cost {:.6} (SE {:.1e})", out.cost.value, out.cost.se),
    ];
    Ok(Outcome {
        artifacts: vec![state_csv(&s.grid, &state)?, Artifact::json("report.json", &out)?],
        summary,
        passed: report.converged,
    })
}

fn verdict_word(converged: bool) -> &'static str {
    if converged {
        "converged"
    } else {
        "did not converge"
    }
}

#[derive(Serialize)]
struct AdjointOutput {
    problem: String,
    state_solver: SolveReport,
    adjoint_solver: Option<SolveReport>,
    p: Vec<NodeSummary>,
    #[serde(rename = "P")]
    big_p: Vec<NodeSummary>,
}

fn adjoint(config: &RunConfig) -> Result<Outcome> {
    let s = setup(config)?;
    let (state, report) = solve_coupled(&s.spec, &s.u, &s.noise, &s.grid, &config.solver)?;
    let mut artifacts = vec![state_csv(&s.grid, &state)?];
    let mut summary = vec![format!("state {}", verdict_word(report.converged))];
    let mut out = AdjointOutput {
        problem: s.spec.name.clone(),
        state_solver: report.clone(),
        adjoint_solver: None,
        p: Vec::new(),
        big_p: Vec::new(),
    };
    let mut passed = report.converged;
    if report.converged {
        let (adj, arep) = solve_adjoint(&s.spec, &state, &s.u, &s.noise, &s.grid, &config.solver)?;
        summary.push(format!("adjoint {} after {} iterations", verdict_word(arep.converged), arep.iterations));
        passed = arep.converged;
        artifacts.push(csv(
            "adjoint.csv",
            &s.grid,
            &[("p", &adj.p), ("P", &adj.big_p), ("q", &adj.q), ("Q", &adj.big_q), ("V", &adj.big_v)],
        )?);
        out.p = node_summary(&adj.p, &s.grid);
        out.big_p = node_summary(&adj.big_p, &s.grid);
        out.adjoint_solver = Some(arep);
    }
    artifacts.push(Artifact::json("report.json", &out)?);
    Ok(Outcome { artifacts, summary, passed })
}

fn probe_controls(config: &RunConfig, spec: &ProblemSpec, nodes: usize) -> Result<Vec<(String, ControlProcess)>> {
    config
        .probes
        .iter()
        .map(|v| Ok((format!("constant {v}"), RunConfig::constant_control(spec, &[*v], nodes)?)))
        .collect()
}

/// Human-readable table of a verdict.
pub fn verdict_table(v: &OptimalityVerdict) -> Vec<String> {
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    let mut lines = vec![
        format!("problem            {}", v.problem),
        format!("cost convexity     {}", mark(v.convexity_ok)),
        format!("H concavity        {}", mark(v.concavity_ok)),
        format!("maximum condition  {}", mark(v.max_condition_ok)),
        format!("duality            {}", mark(v.duality_pass)),
        format!(
            "monotonicity       {} (mu1 {:.4}, mu2 {:.4})",
            v.monotonicity.regime.label(),
            v.monotonicity.mu1_hat,
            v.monotonicity.mu2_hat
        ),
    ];
    for p in &v.probes {
        lines.push(match (p.direct_gap, p.lower_bound) {
            (Some(gap), Some(lb)) => format!("probe {:<13} gap {gap:.4e} >= bound {lb:.4e}: {}", p.label, mark(p.gap_ok == Some(true))),
            _ => format!("probe {:<13} unsolved: {}", p.label, p.solver.stop_reason),
        });
    }
    lines.push(format!("overall            {:?}", v.overall));
    lines.extend(v.reasons.iter().map(|r| format!("  reason: {r}")));
    lines.extend(v.warnings.iter().map(|w| format!("  warning: {w}")));
    lines
}

fn audit(config: &RunConfig) -> Result<Outcome> {
    let s = setup(config)?;
    let probes = probe_controls(config, &s.spec, s.grid.nodes())?;
    let verdict = sufficiency_verdict(&s.spec, &s.u, &probes, &s.noise, &s.grid, &config.audit)?;
    let passed = !config.strict || verdict.overall == Overall::Certified;
    Ok(Outcome {
        summary: verdict_table(&verdict),
        artifacts: vec![Artifact::json("verdict.json", &verdict)?],
        passed,
    })
}

#[derive(Serialize)]
struct OptimizeOutput {
    problem: String,
    converged: bool,
    stop_reason: String,
    iterations: usize,
    final_cost: Option<f64>,
    max_abs_control: Option<f64>,
    non_increasing: bool,
}

fn optimize(config: &RunConfig) -> Result<Outcome> {
    let s = setup(config)?;
    let (u, trace) = optimize_control(&s.spec, &s.u, &s.noise, &s.grid, &config.optimizer)?;
    let mut trace_csv = Vec::new();
    trace.write_csv(&mut trace_csv)?;
    let values: Vec<Vec<f64>> = (0..s.grid.nodes()).map(|i| u.value(i, s.spec.x0(0))).collect();
    let mut control_csv = String::from("node,t");
    for a in 0..s.spec.dims.r {
        control_csv.push_str(&format!(",u[{a}]"));
    }
    control_csv.push('\n');
    for (i, v) in values.iter().enumerate() {
        control_csv.push_str(&format!("{i},{}", s.grid.t(i)));
        for x in v {
            control_csv.push_str(&format!(",{x:e}"));
        }
        control_csv.push('\n');
    }
    let max_abs = u.values().map(|vals| vals.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs())));
    let out = OptimizeOutput {
        problem: s.spec.name.clone(),
        converged: trace.converged,
        stop_reason: trace.stop_reason.clone(),
        iterations: trace.records.len(),
        final_cost: trace.records.last().map(|r| r.cost),
        max_abs_control: max_abs,
        non_increasing: trace.non_increasing(config.optimizer.cost_slack),
    };
    let summary = vec![
        format!("{}: {} ({})", out.problem, if trace.converged { "converged" } else { "stopped" }, trace.stop_reason),
        format!("iterations {}, final cost {:?}, max |u| {:?}", out.iterations, out.final_cost, out.max_abs_control),
    ];
    Ok(Outcome {
        artifacts: vec![
            Artifact::raw("trace.csv", trace_csv),
            Artifact::raw("control.csv", control_csv.into_bytes()),
            Artifact::json("trace.json", &trace)?,
            Artifact::json("report.json", &out)?,
        ],
        summary,
        passed: trace.converged,
    })
}

fn verify_example(config: &RunConfig) -> Result<Outcome> {
    let x = config.problem.horizon.x0[0];
    let control = config.control.first().copied().unwrap_or(0.0);
    let run = run_example(x, control, config.steps, config.paths, config.seed, &config.solver)?;
    let mut checks = state_checks(&run, 0.05)?;
    checks.extend(adjoint_checks(&run, 0.05, 0.02)?);
    let (cost, _) = cost_check(&run, 0.1);
    checks.push(cost);
    let (max_check, _) = max_condition_check(&run, &config.audit.max_condition)?;
    checks.push(max_check);

    let mut artifacts = vec![state_csv(&run.grid, &run.state)?];
    if let Some((adj, _)) = &run.adjoint {
        artifacts.push(csv(
            "adjoint.csv",
            &run.grid,
            &[("p", &adj.p), ("P", &adj.big_p), ("q", &adj.q), ("Q", &adj.big_q), ("V", &adj.big_v)],
        )?);
    }
    let probes = probe_controls(config, &run.spec, run.grid.nodes())?;
    let verdict = sufficiency_verdict(&run.spec, &run.control, &probes, &run.noise, &run.grid, &config.audit)?;
    checks.push(Check::flag(
        "sufficiency verdict certified",
        verdict.overall == Overall::Certified,
        format!("{:?}: {}", verdict.overall, verdict.reasons.join("; ")),
    ));
    artifacts.push(Artifact::json("verdict.json", &verdict)?);
    artifacts.push(Artifact::json("checks.json", &checks)?);
    let mut summary: Vec<String> = checks.iter().map(Check::line).collect();
    summary.push(String::new());
    summary.extend(verdict_table(&verdict));
    Ok(Outcome {
        passed: all_pass(&checks),
        artifacts,
        summary,
    })
}

#[derive(Serialize)]
struct IdentitiesOutput {
    product_rule: Vec<(String, ProductRuleReport)>,
    duality_coarse: DualityRun,
    duality_fine: DualityRun,
    calibrated_c: Option<f64>,
    monotone_reference: DualityRun,
    checks: Vec<Check>,
}

const MONOTONE_REFERENCE: f64 = 0.25;

/// Product rule on the reference integrand sets, then the duality relations
/// for `u = control`, `v = probes[0]` on `steps` and `2·steps`, then terminal
/// cancellation and the chain inequality on the monotone-dissipative instance
/// from `u ≡ 0.25` to the same `v`.
fn identities(config: &RunConfig) -> Result<Outcome> {
    let spec = config.problem()?;
    let grid = config.grid(&spec)?;
    let noise = config.noise(&spec, &grid)?;
    let (mut checks, product_rule) = product_rule_checks(&noise, 1e-10)?;
    let u = config.control.first().copied().unwrap_or(0.0);
    let v = config.probes.first().copied().unwrap_or(0.5);
    let coarse = duality_run(&spec, u, v, config.steps, config.paths, config.seed, &config.solver)?;
    let fine = duality_run(&spec, u, v, 2 * config.steps, config.paths, config.seed, &config.solver)?;
    let (dual_checks, calibrated_c) = duality_checks(&coarse, &fine, spec.horizon, 1.5);
    checks.extend(dual_checks);

    let monotone = catalog_lookup("monotone-dissipative")?;
    // a nonzero reference control gives the instance a nonzero adjoint
    let reference = duality_run(&monotone, MONOTONE_REFERENCE, v, config.steps, config.paths, config.seed, &config.solver)?;
    match &reference.report {
        Some(r) => {
            let mut tc = Check::flag(
                "terminal cancellation (monotone-dissipative)",
                r.terminal_cancellation.abs() <= 3.0 * r.terminal_cancellation_se + 1e-12,
                format!("{:.3e} within 3 x {:.3e}", r.terminal_cancellation, r.terminal_cancellation_se),
            );
            tc.value = Some(r.terminal_cancellation);
            checks.push(tc);
            let mut chain = Check::flag(
                "chain inequality (monotone-dissipative)",
                r.chain_holds(),
                format!("margin {:.3e} (SE {:.1e})", r.chain_margin, r.chain_margin_se),
            );
            chain.value = Some(r.chain_margin);
            checks.push(chain);
        }
        None => checks.push(Check::flag("monotone-dissipative duality computed", false, "a solve did not converge")),
    }
    let out = IdentitiesOutput {
        product_rule,
        duality_coarse: coarse,
        duality_fine: fine,
        calibrated_c,
        monotone_reference: reference,
        checks: checks.clone(),
    };
    Ok(Outcome {
        passed: all_pass(&checks),
        summary: checks.iter().map(Check::line).collect(),
        artifacts: vec![Artifact::json("identities.json", &out)?],
    })
}
