use fbdsde::adjoint::{gradient_fd_discrepancy, solve_adjoint};
use fbdsde::audit::audit_monotonicity;
use fbdsde::cli::duality_run;
use fbdsde::kernel::{check_discrete_product_rule, Integrands, NoiseBundle, TimeGrid};
use fbdsde::model::{catalog_lookup, fd_jacobian, Arg, Coef, ControlSet, EvalCtx, ProblemSpec, StateVec, TerminalMap, TerminalShift, CATALOG};
use fbdsde::optimize::{control_gradients, cost_of_paths};
use fbdsde::paths::AdjointVec;
use fbdsde::solver::{solve_coupled, ControlProcess, PicardOptions};
use proptest::prelude::*;

fn coords(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, len)
}

fn catalog_problem() -> impl Strategy<Value = ProblemSpec> {
    (0..CATALOG.len()).prop_map(|i| catalog_lookup(CATALOG[i]).unwrap())
}

fn random_point(spec: &ProblemSpec, flat: &[f64]) -> (StateVec, Vec<f64>, AdjointVec) {
    let shape = spec.shape();
    let size = shape.state_size();
    let pt = StateVec::from_flat(&shape, &flat[..size]);
    let mut rest = flat[size..].iter().copied();
    let v = spec.controls.project(&rest.by_ref().take(spec.dims.r).collect::<Vec<_>>());
    let mut adj = AdjointVec::zeros(&shape);
    for block in [&mut adj.p, &mut adj.big_p, &mut adj.q, &mut adj.big_q, &mut adj.big_v] {
        for x in block.iter_mut() {
            *x = rest.next().unwrap_or(0.3);
        }
    }
    (pt, v, adj)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficient_jacobians_match_central_differences(spec in catalog_problem(), flat in coords(64), t in 0.0..1.0f64) {
        let (pt, v, _) = random_point(&spec, &flat);
        let shape = spec.shape();
        let ctx = EvalCtx::at(t);
        for coef in Coef::ALL {
            for arg in Arg::ALL {
                let len = shape.coef_size(coef) * shape.arg_size(arg);
                let mut analytic = vec![0.0; len];
                let mut fd = vec![0.0; len];
                spec.coeffs.jacobian(coef, arg, &ctx, &pt.view(), &v, &mut analytic);
                fd_jacobian(spec.coeffs.as_ref(), coef, arg, &ctx, &pt.view(), &v, &mut fd);
                for (a, b) in analytic.iter().zip(&fd) {
                    prop_assert!((a - b).abs() <= 1e-6, "{coef:?}/{arg:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn hamiltonian_gradients_match_central_differences(spec in catalog_problem(), flat in coords(96), t in 0.0..1.0f64) {
        let (pt, v, adj) = random_point(&spec, &flat);
        let gap = gradient_fd_discrepancy(&spec, &EvalCtx::at(t), &pt.view(), &v, &adj.view()).unwrap();
        prop_assert!(gap <= 1e-6, "{gap}");
    }

    #[test]
    fn projection_is_feasible_and_idempotent(lo in -3.0..0.0f64, width in 0.0..3.0f64, x in coords(1)) {
        let set = ControlSet::boxed(vec![lo], vec![lo + width]).unwrap();
        let once = set.project(&x);
        prop_assert!(set.contains(&once));
        prop_assert_eq!(set.project(&once), once.clone());
        if set.contains(&x) {
            prop_assert_eq!(once, x);
        }
    }

    #[test]
    fn affine_terminal_map_differences(c in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64], r in coords(4), x in coords(2), xb in coords(2), xi in coords(2)) {
        let r = vec![r[0] + 3.0, r[1], r[2], r[3] + 3.0];
        let map = TerminalMap::new(c, r, 2, 2, TerminalShift::Constant(xi)).unwrap();
        let (mut hx, mut hxb, mut rd) = (vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]);
        map.eval(&x, 0, &mut hx);
        map.eval(&xb, 0, &mut hxb);
        let dx: Vec<f64> = x.iter().zip(&xb).map(|(a, b)| a - b).collect();
        map.apply_r(&dx, &mut rd);
        for (i, d) in rd.iter().enumerate() {
            prop_assert!((hx[i] - hxb[i] - c * d).abs() <= 1e-10);
        }
        let pairing: f64 = hx.iter().zip(&hxb).zip(&rd).map(|((a, b), d)| (a - b) * d).sum();
        let square: f64 = rd.iter().map(|d| d * d).sum();
        prop_assert!((pairing - c * square).abs() <= 1e-9 * (1.0 + square));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noise_is_a_function_of_the_seed(seed in any::<u64>(), steps in 1usize..8, paths in 1usize..20) {
        let spec = catalog_lookup("example31").unwrap();
        let grid = TimeGrid::new(steps, 1.0).unwrap();
        let bytes = |seed| {
            let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, seed).unwrap();
            let mut out = Vec::new();
            noise.write_to(&mut out).unwrap();
            out
        };
        prop_assert_eq!(bytes(seed), bytes(seed));
        prop_assert_ne!(bytes(seed), bytes(seed.wrapping_add(1)));
    }

    #[test]
    fn product_rule_telescopes_for_constant_integrands(a in coords(5), b in coords(5), seed in any::<u64>()) {
        let spec = catalog_lookup("example31").unwrap();
        let grid = TimeGrid::new(10, 1.0).unwrap();
        let noise = NoiseBundle::sample(&grid, 20, &spec.dims, &spec.jumps, seed).unwrap();
        let marks = noise.marks();
        let first = Integrands::constant(&noise, vec![a[0]], &[a[1]], &[a[2]], &[a[3]], &vec![a[4]; marks]);
        let second = Integrands::constant(&noise, vec![b[0]], &[b[1]], &[b[2]], &[b[3]], &vec![b[4]; marks]);
        let report = check_discrete_product_rule(&first, &second, &noise).unwrap();
        prop_assert!(report.pathwise_ok(1e-10), "{}", report.pathwise_max_residual);
        prop_assert!((report.backward_correction + a[2] * b[2]).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn monotonicity_estimate_does_not_depend_on_the_seed(seed in any::<u64>()) {
        let spec = catalog_lookup("monotone-dissipative").unwrap();
        let a = audit_monotonicity(&spec, 4000, seed);
        let b = audit_monotonicity(&spec, 4000, seed.wrapping_add(99));
        prop_assert_eq!(a.regime, b.regime);
        prop_assert!((a.mu1_hat - b.mu1_hat).abs() <= 0.05 * a.mu1_hat.abs());
        prop_assert!((a.mu2_hat - b.mu2_hat).abs() <= 0.05 * a.mu2_hat.abs().max(1e-3));
    }

    #[test]
    fn cancellation_and_chain_hold_on_the_monotone_instance(u in -0.75..0.75f64, v in -1.0..1.0f64, seed in 0u64..1000) {
        let spec = catalog_lookup("monotone-dissipative").unwrap();
        let run = duality_run(&spec, u, v, 10, 60, seed, &PicardOptions::default()).unwrap();
        let r = run.report.unwrap();
        prop_assert!(r.terminal_cancellation.abs() <= 3.0 * r.terminal_cancellation_se + 1e-10);
        prop_assert!(r.chain_holds(), "margin {} se {}", r.chain_margin, r.chain_margin_se);
    }

    #[test]
    fn path_order_does_not_change_gradients_or_cost(shift in 1usize..199) {
        let spec = catalog_lookup("monotone-dissipative").unwrap();
        let grid = TimeGrid::new(8, spec.horizon).unwrap();
        let noise = NoiseBundle::sample(&grid, 200, &spec.dims, &spec.jumps, 5).unwrap();
        let perm: Vec<usize> = (0..200).map(|p| (p * 7 + shift) % 200).collect();
        let permuted = noise.permuted(&perm).unwrap();
        let u = ControlProcess::constant(&spec.controls, &[0.25], grid.nodes());
        let opts = PicardOptions { tol: 1e-8, max_iter: 200, ..PicardOptions::default() };
        let run = |noise: &NoiseBundle| {
            let (state, sr) = solve_coupled(&spec, &u, noise, &grid, &opts).unwrap();
            let (adjoint, ar) = solve_adjoint(&spec, &state, &u, noise, &grid, &opts).unwrap();
            assert!(sr.converged && ar.converged, "{} / {}", sr.stop_reason, ar.stop_reason);
            let g = control_gradients(&spec, &state, &adjoint, &u, &grid).unwrap();
            (cost_of_paths(&spec, &state, &u, &grid).value, g)
        };
        let (cost, g) = run(&noise);
        let (cost_perm, g_perm) = run(&permuted);
        prop_assert!((cost - cost_perm).abs() <= 1e-9 * cost.abs().max(1.0));
        for i in 0..grid.nodes() {
            for (q, &p) in perm.iter().enumerate() {
                prop_assert!((g[i][p][0] - g_perm[i][q][0]).abs() <= 1e-7, "node {i} path {p}: {} vs {}", g[i][p][0], g_perm[i][q][0]);
            }
        }
    }
}
