use fbdsde::adjoint::solve_adjoint;
use fbdsde::audit::duality_residuals;
use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::{catalog_lookup, example31, ProblemSpec};
use fbdsde::paths::{AdjointPaths, StatePaths};
use fbdsde::solver::{solve_coupled, ControlProcess, PicardOptions};

struct Solved {
    grid: TimeGrid,
    noise: NoiseBundle,
    u: ControlProcess,
    state: StatePaths,
    adjoint: AdjointPaths,
}

fn solve_pair(spec: &ProblemSpec, v: f64, steps: usize, paths: usize) -> Solved {
    let grid = TimeGrid::new(steps, spec.horizon).unwrap();
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, 21).unwrap();
    let u = ControlProcess::constant(&spec.controls, &[v], grid.nodes());
    let opts = PicardOptions::default();
    let (state, rep) = solve_coupled(spec, &u, &noise, &grid, &opts).unwrap();
    assert!(rep.converged);
    let (adjoint, arep) = solve_adjoint(spec, &state, &u, &noise, &grid, &opts).unwrap();
    assert!(arep.converged, "{}", arep.stop_reason);
    Solved {
        grid,
        noise,
        u,
        state,
        adjoint,
    }
}

#[test]
fn example_adjoint_matches_closed_form() {
    let x = 1.5;
    let s = solve_pair(&example31(x), 0.0, 25, 300);
    assert!(s.adjoint.p.sup_distance(|i| vec![-x * (1.0 + s.grid.t(i))]) < 0.05);
    assert!(s.adjoint.big_p.sup_distance(|i| vec![x * (4.0 - s.grid.t(i))]) < 0.05);
    for i in 0..s.grid.nodes() {
        assert!(s.adjoint.p.std_at(i)[0] <= 0.02);
        assert!(s.adjoint.big_p.std_at(i)[0] <= 0.02);
    }
}

#[test]
fn adjoint_boundary_identities() {
    // p_0 = −γ_Y(Y_0) and P_N = −cRᵀp_N + β_y(y_N), all quadratic with unit weight
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let s = solve_pair(&spec, 0.25, 20, 200);
    let n = s.grid.steps();
    let c = spec.terminal.c;
    for p in 0..200 {
        let p0 = s.adjoint.p.get(0, p)[0];
        assert!((p0 + s.state.big_y.get(0, p)[0]).abs() < 1e-10);
        let pn = s.adjoint.big_p.get(n, p)[0];
        let target = -c * s.adjoint.p.get(n, p)[0] + s.state.y.get(n, p)[0];
        assert!((pn - target).abs() < 1e-10);
    }
}

#[test]
fn solved_pair_passes_duality() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let s = solve_pair(&spec, 0.25, 25, 200);
    let v = ControlProcess::constant(&spec.controls, &[-0.5], s.grid.nodes());
    let (state_v, rep) = solve_coupled(&spec, &v, &s.noise, &s.grid, &PicardOptions::default()).unwrap();
    assert!(rep.converged);
    let report = duality_residuals(&spec, &s.state, &state_v, &s.u, &v, &s.adjoint, &s.noise, &s.grid).unwrap();
    assert!(report.passes(s.grid.dt()), "{report:?}");
    assert!(report.chain_holds());
}
