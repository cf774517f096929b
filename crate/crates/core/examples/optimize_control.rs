//! Projected Hamiltonian ascent on the monotone-dissipative instance from
//! `u ≡ 0.5`, printing the cost trace.

use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::catalog_lookup;
use fbdsde::optimize::{optimize_control, OptimizerOptions};
use fbdsde::solver::ControlProcess;

fn main() -> fbdsde::Result<()> {
    let spec = catalog_lookup("monotone-dissipative")?;
    let grid = TimeGrid::new(25, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, 200, &spec.dims, &spec.jumps, 5)?;
    let u0 = ControlProcess::constant(&spec.controls, &[0.5], grid.nodes());
    let (u, trace) = optimize_control(&spec, &u0, &noise, &grid, &OptimizerOptions::default())?;
    for r in &trace.records {
        println!("{:>4} cost {:.8} step {:>6} |grad| {:.2e}", r.iteration, r.cost, r.step, r.gradient_norm);
    }
    println!("{} ({})", if trace.converged { "converged" } else { "stopped" }, trace.stop_reason);
    println!("u_0 = {:?}, u_N/2 = {:?}", u.value(0, &[0.0]), u.value(grid.steps() / 2, &[0.0]));
    Ok(())
}
