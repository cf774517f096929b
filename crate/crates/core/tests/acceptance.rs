//! One PASS/FAIL line per acceptance criterion.
//!
//! A criterion that fails only because a required coupled solve did not
//! converge is printed as FAIL with the solver's stop reason and does not
//! abort the suite. Any other failure does.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fbdsde::adjoint::gradient_fd_discrepancy;
use fbdsde::audit::{audit_monotonicity, MaxConditionOptions, Regime};
use fbdsde::cli::{
    adjoint_checks, cost_check, duality_checks, duality_run, max_condition_check, product_rule_checks,
    run_example, state_checks, Check, ExampleRun,
};
use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::{catalog_lookup, example31, EvalCtx, ProblemSpec};
use fbdsde::optimize::{optimize_control, OptimizerOptions};
use fbdsde::paths::AdjointVec;
use fbdsde::solver::{ControlProcess, PicardOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS: usize = 50;
const PATHS: usize = 4000;
const SEED: u64 = 7;
const TOL: f64 = 0.05;

struct Criterion {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    /// set when the failure is a coupled solve that did not converge
    not_converged: Option<String>,
}

impl Criterion {
    fn from_checks(id: usize, title: &'static str, checks: &[Check]) -> Self {
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.line()).collect();
        let detail = if failed.is_empty() {
            format!("{} checks", checks.len())
        } else {
            failed.join("; ")
        };
        Self {
            id,
            title,
            pass: failed.is_empty(),
            detail,
            not_converged: None,
        }
    }

    fn line(&self) -> String {
        let word = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {word}: {} ({})", self.id, self.title, self.detail)
    }
}

fn state_recovery(run: &ExampleRun, seconds: f64) -> Criterion {
    let mut checks = state_checks(run, TOL).unwrap();
    checks.push(Check::at_most("runtime seconds", seconds, 60.0));
    let mut c = Criterion::from_checks(1, "state recovery", &checks);
    if !run.state_report.converged {
        c.not_converged = Some(run.state_report.stop_reason.clone());
    }
    c
}

fn adjoint_recovery(run: &ExampleRun) -> Criterion {
    let checks = adjoint_checks(run, TOL, 0.02).unwrap();
    let mut c = Criterion::from_checks(2, "adjoint recovery", &checks);
    if let Some((_, r)) = &run.adjoint {
        if !r.converged {
            c.not_converged = Some(r.stop_reason.clone());
        }
    }
    c
}

fn cost_value(run: &ExampleRun) -> Criterion {
    let (check, _) = cost_check(run, 0.1);
    Criterion::from_checks(3, "cost at the rest control", &[check])
}

fn maximum_condition(run: &ExampleRun) -> Criterion {
    let (check, _) = max_condition_check(run, &MaxConditionOptions::default()).unwrap();
    Criterion::from_checks(4, "maximum condition on 41 grid points", &[check])
}

fn optimizer() -> Criterion {
    let spec = example31(1.0);
    let grid = TimeGrid::new(STEPS, spec.horizon).unwrap();
    let noise = NoiseBundle::sample(&grid, PATHS, &spec.dims, &spec.jumps, SEED).unwrap();
    let u0 = ControlProcess::constant(&spec.controls, &[0.5], grid.nodes());
    let opts = OptimizerOptions {
        max_iter: 200,
        ..OptimizerOptions::default()
    };
    let (u, trace) = optimize_control(&spec, &u0, &noise, &grid, &opts).unwrap();
    let sup = u.values().unwrap().iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()));
    let checks = [
        Check::at_most("max |u|", sup, 0.05),
        Check::flag("cost trace non-increasing", trace.non_increasing(1e-9), format!("{:?}", trace.costs())),
        Check::flag("optimizer converged", trace.converged, trace.stop_reason.clone()),
    ];
    let mut c = Criterion::from_checks(5, "optimizer from 0.5", &checks);
    if trace.stop_reason.contains("did not converge") {
        c.not_converged = Some(trace.stop_reason.clone());
    }
    c
}

fn gradient_probes(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> f64 {
    let shape = spec.shape();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let flat: Vec<f64> = (0..shape.state_size()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pt = fbdsde::model::StateVec::from_flat(&shape, &flat);
        let v = spec.controls.project(&(0..spec.dims.r).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<_>>());
        let mut adj = AdjointVec::zeros(&shape);
        for block in [&mut adj.p, &mut adj.big_p, &mut adj.q, &mut adj.big_q, &mut adj.big_v] {
            block.iter_mut().for_each(|x| *x = rng.random_range(-2.0..2.0));
        }
        let ctx = EvalCtx::at(rng.random_range(0.0..spec.horizon));
        worst = worst.max(gradient_fd_discrepancy(spec, &ctx, &pt.view(), &v, &adj.view()).unwrap());
    }
    worst
}

fn hamiltonian_gradients() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let checks: Vec<Check> = ["example31", "monotone-dissipative"]
        .iter()
        .map(|name| {
            let spec = catalog_lookup(name).unwrap();
            Check::at_most(&format!("relative gradient gap ({name})"), gradient_probes(&spec, &mut rng), 1e-6)
        })
        .collect();
    Criterion::from_checks(6, "Hamiltonian gradients vs central differences", &checks)
}

fn product_rule(run: &ExampleRun) -> Criterion {
    let (checks, _) = product_rule_checks(&run.noise, 1e-10).unwrap();
    Criterion::from_checks(7, "discrete product rule", &checks)
}

fn duality() -> Criterion {
    let spec = example31(1.0);
    let solver = PicardOptions::default();
    let coarse = duality_run(&spec, 0.0, 0.5, STEPS, PATHS, SEED, &solver).unwrap();
    let fine = duality_run(&spec, 0.0, 0.5, 2 * STEPS, PATHS, SEED, &solver).unwrap();
    let (checks, _) = duality_checks(&coarse, &fine, spec.horizon, 1.5);
    let mut c = Criterion::from_checks(8, "duality residuals and refinement", &checks);
    let reports = [&coarse, &fine].into_iter().flat_map(|r| [Some(&r.state_u), r.adjoint.as_ref(), r.state_v.as_ref()]);
    if let Some(r) = reports.flatten().find(|r| !r.converged) {
        c.not_converged = Some(r.stop_reason.clone());
    }
    c
}

fn monotonicity() -> Criterion {
    let dissipative = audit_monotonicity(&catalog_lookup("monotone-dissipative").unwrap(), 10_000, SEED);
    let anti = audit_monotonicity(&catalog_lookup("anti-monotone").unwrap(), 10_000, SEED);
    let example = audit_monotonicity(&example31(1.0), 10_000, SEED);
    let in_range = |x: f64| (0.95..=1.0).contains(&x);
    let checks = [
        Check::flag("monotone-dissipative is A1", dissipative.regime == Regime::A1, dissipative.regime.label()),
        Check::flag("mu1 in [0.95, 1]", in_range(dissipative.mu1_hat), format!("{:.4}", dissipative.mu1_hat)),
        Check::flag("mu2 in [0.95, 1]", in_range(dissipative.mu2_hat), format!("{:.4}", dissipative.mu2_hat)),
        Check::flag("anti-monotone is A1'", anti.regime == Regime::A1Prime, anti.regime.label()),
        Check::flag("example report", example.sample_count == 10_000, example.regime.label()),
    ];
    Criterion::from_checks(9, "monotonicity audit", &checks)
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "timing.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Criterion {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        Command::new(env!("CARGO_BIN_EXE_fbdsde"))
            .args(["verify-example", "--x", "1", "--paths", "500", "--seed", "7", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
    }
    let (a, b) = (artifacts(dirs[0].path()), artifacts(dirs[1].path()));
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    let checks = [
        Check::flag("artifacts written", names.contains(&"state.csv") && names.contains(&"checks.json"), names.join(",")),
        Check::flag("byte-identical", a == b, format!("{} files", a.len())),
    ];
    Criterion::from_checks(10, "verify-example determinism", &checks)
}

fn main() {
    let started = Instant::now();
    let run = run_example(1.0, 0.0, STEPS, PATHS, SEED, &PicardOptions::default()).unwrap();
    let seconds = started.elapsed().as_secs_f64();

    let criteria = vec![
        state_recovery(&run, seconds),
        adjoint_recovery(&run),
        cost_value(&run),
        maximum_condition(&run),
        optimizer(),
        hamiltonian_gradients(),
        product_rule(&run),
        duality(),
        monotonicity(),
        determinism(),
    ];
    for c in &criteria {
        println!("{}", c.line());
        if let Some(reason) = &c.not_converged {
            println!("             coupled solve did not converge: {reason}");
        }
    }
    let unexplained: Vec<_> = criteria.iter().filter(|c| !c.pass && c.not_converged.is_none()).map(|c| c.id).collect();
    if !unexplained.is_empty() {
        eprintln!("criteria failed: {unexplained:?}");
        std::process::exit(1);
    }
}
