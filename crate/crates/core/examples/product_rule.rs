//! Discrete integration by parts for processes driven by forward and
//! backward Brownian motions and a compensated Poisson measure.

use fbdsde::kernel::{check_discrete_product_rule, reference_integrand_sets, NoiseBundle, TimeGrid};
use fbdsde::model::example31;

fn main() -> fbdsde::Result<()> {
    let spec = example31(1.0);
    let grid = TimeGrid::new(50, 1.0)?;
    let noise = NoiseBundle::sample(&grid, 4000, &spec.dims, &spec.jumps, 11)?;
    for (name, a, b) in reference_integrand_sets(&noise) {
        let r = check_discrete_product_rule(&a, &b, &noise)?;
        println!(
            "{name:>16}: pathwise {:.1e}, expectation {:+.3e} (SE {:.1e}), backward correction {:+.4}",
            r.pathwise_max_residual, r.expectation_residual, r.expectation_se, r.backward_correction
        );
    }
    Ok(())
}
