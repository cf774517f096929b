use fbdsde::audit::{audit_monotonicity, sufficiency_verdict, Overall, VerdictOptions};
use fbdsde::cli::{all_pass, duality_checks, duality_run};
use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::{build_lq_problem, catalog_lookup, decoupled_constant_config, example31, CostConfig, ProblemSpec};
use fbdsde::solver::{ControlProcess, PicardOptions};

fn options() -> VerdictOptions {
    VerdictOptions {
        monotonicity_samples: 2000,
        convexity_samples: 300,
        concavity_samples: 300,
        ..VerdictOptions::default()
    }
}

fn verdict(spec: &ProblemSpec, u: f64, probes: &[f64], steps: usize, paths: usize) -> fbdsde::audit::OptimalityVerdict {
    let grid = TimeGrid::new(steps, spec.horizon).unwrap();
    let noise = NoiseBundle::sample(&grid, paths, &spec.dims, &spec.jumps, 13).unwrap();
    let u = ControlProcess::constant(&spec.controls, &[u], grid.nodes());
    let probes: Vec<_> = probes
        .iter()
        .map(|v| (format!("{v}"), ControlProcess::constant(&spec.controls, &[*v], grid.nodes())))
        .collect();
    sufficiency_verdict(spec, &u, &probes, &noise, &grid, &options()).unwrap()
}

#[test]
fn optimal_rest_state_is_certified() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let v = verdict(&spec, 0.0, &[0.5, -0.5, 1.0], 20, 200);
    assert_eq!(v.overall, Overall::Certified, "{:?}", v.reasons);
    for p in &v.probes {
        assert!(p.direct_gap.unwrap() >= 0.0);
        assert_eq!(p.gap_ok, Some(true));
    }
}

#[test]
fn suboptimal_control_fails_the_maximum_condition() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let v = verdict(&spec, 0.5, &[0.0], 20, 200);
    assert!(!v.max_condition_ok);
    assert_eq!(v.overall, Overall::NotCertified);
}

#[test]
fn zero_problem_is_certified_vacuously() {
    let mut config = decoupled_constant_config();
    config.cost = CostConfig::default();
    let spec = build_lq_problem(&config).unwrap();
    let v = verdict(&spec, 0.0, &[0.5, -1.0], 10, 100);
    assert_eq!(v.overall, Overall::Certified, "{:?}", v.reasons);
    for p in &v.probes {
        assert_eq!(p.direct_gap, Some(0.0));
        assert_eq!(p.lower_bound, Some(0.0));
    }
}

#[test]
fn unsolvable_probe_makes_the_verdict_inconclusive_not_negative() {
    let spec = example31(1.0);
    let without = verdict(&spec, 0.0, &[], 20, 200);
    assert_eq!(without.overall, Overall::Certified, "{:?}", without.reasons);
    let with = verdict(&spec, 0.0, &[0.5], 20, 200);
    assert_eq!(with.overall, Overall::Inconclusive);
    assert!(with.reasons.iter().any(|r| r.contains("did not converge")));
}

#[test]
fn adding_a_passing_probe_keeps_the_certificate() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let one = verdict(&spec, 0.0, &[0.5], 20, 150);
    let two = verdict(&spec, 0.0, &[0.5, -0.75], 20, 150);
    assert_eq!(one.overall, Overall::Certified);
    assert_eq!(two.overall, Overall::Certified);
}

#[test]
fn example_monotonicity_report_does_not_crash() {
    let report = audit_monotonicity(&example31(1.0), 10_000, 3);
    assert_eq!(report.sample_count, 10_000);
    assert!(report.mu1_hat.is_finite() && report.mu2_hat.is_finite());
}

#[test]
fn duality_residuals_shrink_with_the_step_on_a_monotone_instance() {
    let spec = catalog_lookup("monotone-dissipative").unwrap();
    let opts = PicardOptions {
        tol: 1e-8,
        max_iter: 200,
        ..PicardOptions::default()
    };
    let coarse = duality_run(&spec, 0.25, -0.5, 25, 100, 4, &opts).unwrap();
    let fine = duality_run(&spec, 0.25, -0.5, 50, 100, 4, &opts).unwrap();
    let (checks, c) = duality_checks(&coarse, &fine, spec.horizon, 1.5);
    assert!(c.is_some());
    let coarse_and_shrink: Vec<_> = checks
        .iter()
        .filter(|c| c.name.contains("N = 25") || c.name.contains("shrink"))
        .cloned()
        .collect();
    assert_eq!(coarse_and_shrink.len(), 4);
    assert!(all_pass(&coarse_and_shrink), "{checks:#?}");
}
