use fbdsde::kernel::{check_discrete_product_rule, reference_integrand_sets, NoiseBundle, TimeGrid};
use fbdsde::model::example31;

const PATHS: usize = 100_000;

fn bundle() -> NoiseBundle {
    let spec = example31(1.0);
    let grid = TimeGrid::new(4, 1.0).unwrap();
    NoiseBundle::sample(&grid, PATHS, &spec.dims, &spec.jumps, 2024).unwrap()
}

fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn brownian_increments_have_the_right_moments() {
    let noise = bundle();
    let dt = noise.grid().dt();
    let tol = 4.0 / (PATHS as f64).sqrt();
    for step in 0..noise.steps() {
        for inc in [
            moments((0..PATHS).map(|p| noise.dw(step, p)[0])),
            moments((0..PATHS).map(|p| noise.db(step, p)[0])),
        ] {
            assert!(inc.0.abs() <= tol * dt.sqrt(), "mean {}", inc.0);
            assert!((inc.1 / dt - 1.0).abs() <= tol * 2f64.sqrt(), "variance {}", inc.1);
        }
    }
}

#[test]
fn forward_and_backward_noises_are_uncorrelated() {
    let noise = bundle();
    let dt = noise.grid().dt();
    for step in 0..noise.steps() {
        let cov = (0..PATHS).map(|p| noise.dw(step, p)[0] * noise.db(step, p)[0]).sum::<f64>() / PATHS as f64;
        assert!((cov / dt).abs() <= 4.0 / (PATHS as f64).sqrt(), "step {step}: {cov}");
    }
}

#[test]
fn jump_counts_are_poisson_with_the_mark_rates() {
    let noise = bundle();
    let dt = noise.grid().dt();
    for (j, w) in noise.weights().to_vec().into_iter().enumerate() {
        let rate = w * dt;
        let (mean, var) = moments((0..PATHS).map(|p| noise.counts(0, p)[j] as f64));
        let tol = 4.0 * (rate / PATHS as f64).sqrt();
        assert!((mean - rate).abs() <= tol, "mark {j}: mean {mean} vs {rate}");
        assert!((var - rate).abs() <= 4.0 * tol, "mark {j}: variance {var} vs {rate}");
        let (comp, _) = moments((0..PATHS).map(|p| noise.dn(0, p, j)));
        assert!(comp.abs() <= tol);
    }
}

#[test]
fn cumulative_fields_are_sums_of_increments() {
    let noise = bundle();
    let n = noise.steps();
    for p in (0..PATHS).step_by(997) {
        let w: f64 = (0..n).map(|i| noise.dw(i, p)[0]).sum();
        let b: f64 = (0..n).map(|i| noise.db(i, p)[0]).sum();
        assert!((noise.w_cum(n, p)[0] - w).abs() <= 1e-12);
        assert!((noise.b_tail(0, p)[0] - b).abs() <= 1e-12);
        assert_eq!(noise.b_tail(n, p)[0], 0.0);
    }
}

#[test]
fn reference_product_rule_sets_balance() {
    let spec = example31(1.0);
    let grid = TimeGrid::new(20, 1.0).unwrap();
    let noise = NoiseBundle::sample(&grid, 4000, &spec.dims, &spec.jumps, 11).unwrap();
    for (name, a, b) in reference_integrand_sets(&noise) {
        let r = check_discrete_product_rule(&a, &b, &noise).unwrap();
        assert!(r.pathwise_ok(1e-10), "{name}: {}", r.pathwise_max_residual);
        assert!(r.expectation_ok(), "{name}: {} (SE {})", r.expectation_residual, r.expectation_se);
        assert!(r.backward_correction < 0.0, "{name}");
    }
}
