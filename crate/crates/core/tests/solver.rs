use fbdsde::kernel::{field_norm, NoiseBundle, TimeGrid};
use fbdsde::model::{
    build_lq_problem, catalog_lookup, decoupled_constant_config, example31, AffineTerm, ProblemConfig, ProblemSpec,
};
use fbdsde::paths::StatePaths;
use fbdsde::solver::{solve_coupled, terminal_residual, ControlProcess, PicardOptions, SolveReport};

fn solve(spec: &ProblemSpec, v: f64, steps: usize, paths: usize, seed: u64) -> (StatePaths, SolveReport, TimeGrid) {
    solve_with(spec, v, steps, paths, seed, &PicardOptions::default())
}

/// Undamped with a tight tolerance, for deterministic cases that should be
/// exact.
fn exact_opts() -> PicardOptions {
    PicardOptions {
        theta: 1.0,
        tol: 1e-13,
        ..PicardOptions::default()
    }
}

fn solve_with(
    spec: &ProblemSpec,
    v: f64,
    steps: usize,
    paths: usize,
    seed: u64,
    opts: &PicardOptions,
) -> (StatePaths, SolveReport, TimeGrid) {
    let grid = TimeGrid::new(steps, spec.horizon).unwrap();
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, seed).unwrap();
    let u = ControlProcess::constant(&spec.controls, &[v], grid.nodes());
    let (state, report) = solve_coupled(spec, &u, &noise, &grid, opts).unwrap();
    (state, report, grid)
}

fn with_constant(mut config: ProblemConfig, drift: f64, driver: f64) -> ProblemSpec {
    config.lq.b.constant = AffineTerm::constant(vec![drift]);
    config.lq.f.constant = AffineTerm::constant(vec![driver]);
    build_lq_problem(&config).unwrap()
}

#[test]
fn decoupled_constant_gives_y_equal_shift() {
    let spec = catalog_lookup("decoupled-constant").unwrap();
    let (state, report, _) = solve(&spec, 0.0, 20, 200, 1);
    assert!(report.converged);
    assert!(state.big_y.sup_distance(|_| vec![5.0]) < 1e-10);
    assert!(state.y.sup_distance(|_| vec![0.0]) < 1e-12);
}

#[test]
fn monotone_dissipative_at_rest_stays_at_zero() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let (state, report, grid) = solve(&spec, 0.0, 20, 200, 2);
    assert!(report.converged);
    for field in state.fields() {
        assert!(field_norm(field, &grid, None).unwrap() < 1e-12);
    }
}

#[test]
fn constant_driver_integrates_backward() {
    // f ≡ 1 gives Y_t = ξ + (T − t)
    let spec = with_constant(decoupled_constant_config(), 0.0, 1.0);
    let (state, report, grid) = solve_with(&spec, 0.0, 20, 100, 3, &exact_opts());
    assert!(report.converged);
    assert!(state.big_y.sup_distance(|i| vec![5.0 + 1.0 - grid.t(i)]) < 1e-10);
}

#[test]
fn constant_drift_integrates_forward() {
    // b ≡ 1 gives y_t = t and Y_t = y_T + 5 = 6
    let spec = with_constant(decoupled_constant_config(), 1.0, 0.0);
    let (state, report, grid) = solve_with(&spec, 0.0, 20, 100, 4, &exact_opts());
    assert!(report.converged);
    assert!(state.y.sup_distance(|i| vec![grid.t(i)]) < 1e-10);
    assert!(state.big_y.sup_distance(|_| vec![6.0]) < 1e-10);
}

#[test]
fn boundary_conditions_hold_exactly() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let (state, report, _) = solve(&spec, 0.5, 20, 300, 5);
    assert!(report.converged);
    assert_eq!(report.initial_residual, 0.0);
    assert!(terminal_residual(&spec, &state) < 1e-14);
}

#[test]
fn picard_changes_decrease_after_second_iteration() {
    for (name, v) in [("monotone-dissipative", 0.5), ("decoupled-constant", 0.3), ("anti-monotone", 0.5)] {
        let spec = catalog_lookup(name).unwrap();
        let (_, report, _) = solve(&spec, v, 20, 300, 6);
        assert!(report.converged, "{name}: {}", report.stop_reason);
        let tail = &report.changes[report.changes.len().min(2)..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]), "{name}: {:?}", report.changes);
    }
}

#[test]
fn example_recovers_closed_form_state() {
    let spec = example31(1.0);
    let (state, report, grid) = solve(&spec, 0.0, 50, 500, 7);
    assert!(report.converged);
    assert!(state.y.sup_distance(|_| vec![1.0]) < 0.05);
    assert!(state.big_y.sup_distance(|_| vec![1.0]) < 0.05);
    assert!(field_norm(&state.big_z, &grid, None).unwrap() < 0.05);
}

#[test]
fn refinement_moves_y0_less_than_coarse_error() {
    let spec = example31(0.7);
    let (coarse, _, _) = solve(&spec, 0.0, 25, 400, 8);
    let (fine, _, _) = solve(&spec, 0.0, 50, 800, 8);
    let coarse_error = coarse.big_y.sup_distance(|_| vec![0.7]);
    let y0 = |s: &StatePaths| s.big_y.mean_at(0)[0];
    let se = coarse.big_y.std_at(0)[0] / (400f64).sqrt();
    assert!((y0(&fine) - y0(&coarse)).abs() <= coarse_error + 3.0 * se + 1e-12);
}

#[test]
fn divergence_is_reported_not_raised() {
    // the benchmark has no unique solution under a nonzero constant control
    let spec = example31(1.0);
    let (state, report, _) = solve(&spec, 0.5, 20, 300, 9);
    assert!(!report.converged);
    assert!(report.stop_reason.starts_with("diverged"), "{}", report.stop_reason);
    assert!(state.all_finite());
}

#[test]
fn mismatched_control_is_rejected() {
    let spec = example31(1.0);
    let grid = TimeGrid::new(10, 1.0).unwrap();
    let noise = NoiseBundle::sample(&grid, 10, &spec.dims, &spec.jumps, 1).unwrap();
    let u = ControlProcess::constant(&spec.controls, &[0.0], 5);
    assert!(solve_coupled(&spec, &u, &noise, &grid, &PicardOptions::default()).is_err());
}
