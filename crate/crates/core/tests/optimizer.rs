use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::{catalog_lookup, example31, ProblemSpec};
use fbdsde::optimize::{optimize_control, AscentMode, OptimizerOptions, OptimizerTrace};
use fbdsde::solver::ControlProcess;

fn run(spec: &ProblemSpec, u0: f64, opts: &OptimizerOptions, steps: usize, paths: usize) -> (ControlProcess, OptimizerTrace) {
    let grid = TimeGrid::new(steps, spec.horizon).unwrap();
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, 17).unwrap();
    let u0 = ControlProcess::constant(&spec.controls, &[u0], grid.nodes());
    optimize_control(spec, &u0, &noise, &grid, opts).unwrap()
}

fn max_abs(u: &ControlProcess) -> f64 {
    u.values().unwrap().iter().flatten().fold(0.0, |m, x: &f64| m.max(x.abs()))
}

#[test]
fn decoupled_quadratic_control_cost_is_driven_to_zero() {
    let spec = catalog_lookup("decoupled-constant").unwrap();
    let (u, trace) = run(&spec, 0.5, &OptimizerOptions::default(), 10, 50);
    assert!(trace.converged, "{}", trace.stop_reason);
    assert!(max_abs(&u) <= 1e-3);
    assert!(trace.non_increasing(1e-9));
}

#[test]
fn monotone_instance_reaches_the_rest_control() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let (u, trace) = run(&spec, 0.5, &OptimizerOptions::default(), 20, 100);
    assert!(trace.converged, "{}", trace.stop_reason);
    assert!(max_abs(&u) <= 0.05);
    assert!(trace.non_increasing(1e-9));
    for r in &trace.records {
        assert!(r.control.values().unwrap().iter().all(|v| spec.controls.contains(v)));
    }
}

#[test]
fn control_satisfying_the_maximum_condition_does_not_move() {
    let spec = example31(1.0);
    let (u, trace) = run(&spec, 0.0, &OptimizerOptions::default(), 20, 100);
    assert!(trace.converged);
    assert_eq!(trace.records.len(), 1);
    assert!(trace.records[0].gradient_norm <= OptimizerOptions::default().grad_tol);
    assert_eq!(max_abs(&u), 0.0);
}

#[test]
fn feedback_mode_lowers_the_cost() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let opts = OptimizerOptions {
        mode: AscentMode::Feedback,
        max_iter: 20,
        ..OptimizerOptions::default()
    };
    let (u, trace) = run(&spec, 0.5, &opts, 20, 100);
    assert!(!u.is_open_loop());
    assert!(trace.non_increasing(1e-9));
    let costs = trace.costs();
    assert!(costs.last().unwrap() < &(0.1 * costs[0]), "{costs:?}");
}

#[test]
fn solver_failure_stops_the_run() {
    let spec = example31(1.0);
    let (_, trace) = run(&spec, 0.5, &OptimizerOptions::default(), 20, 100);
    assert!(!trace.converged);
    assert!(trace.stop_reason.contains("did not converge"), "{}", trace.stop_reason);
}

#[test]
fn invalid_options_are_rejected() {
    let spec = catalog_lookup("decoupled-constant").unwrap();
    let grid = TimeGrid::new(5, 1.0).unwrap();
    let noise = NoiseBundle::sample(&grid, 5, &spec.dims, &spec.jumps, 1).unwrap();
    let u0 = ControlProcess::constant(&spec.controls, &[0.0], grid.nodes());
    let opts = OptimizerOptions {
        armijo: 1.5,
        ..OptimizerOptions::default()
    };
    assert!(optimize_control(&spec, &u0, &noise, &grid, &opts).is_err());
}
