//! Solves the adjoint system along the benchmark's state and prints `p`, `P`
//! against `−x(1+t)` and `x(4−t)`.

use fbdsde::adjoint::solve_adjoint;
use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::example31;
use fbdsde::solver::{solve_coupled, ControlProcess, PicardOptions};

fn main() -> fbdsde::Result<()> {
    let x = 1.0;
    let spec = example31(x);
    let grid = TimeGrid::new(50, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, 500, &spec.dims, &spec.jumps, 7)?;
    let u = ControlProcess::constant(&spec.controls, &[0.0], grid.nodes());
    let opts = PicardOptions::default();
    let (state, _) = solve_coupled(&spec, &u, &noise, &grid, &opts)?;
    let (adj, report) = solve_adjoint(&spec, &state, &u, &noise, &grid, &opts)?;

    println!("adjoint converged: {} ({} iterations)", report.converged, report.iterations);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "p", "-x(1+t)", "P", "x(4-t)");
    for i in (0..grid.nodes()).step_by(10) {
        let t = grid.t(i);
        println!(
            "{t:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            adj.p.mean_at(i)[0],
            -x * (1.0 + t),
            adj.big_p.mean_at(i)[0],
            x * (4.0 - t)
        );
    }
    Ok(())
}
