//! Solves the closed-form benchmark under `u ≡ 0` and compares with the
//! exact solution `(y, Y, z, Z, k) = (x, x, 0, 0, 0)`.

use fbdsde::kernel::{field_norm, NoiseBundle, TimeGrid};
use fbdsde::model::example31;
use fbdsde::solver::{solve_coupled, ControlProcess, PicardOptions};

fn main() -> fbdsde::Result<()> {
    let x = 1.0;
    let spec = example31(x);
    let grid = TimeGrid::new(50, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, 1000, &spec.dims, &spec.jumps, 7)?;
    let u = ControlProcess::constant(&spec.controls, &[0.0], grid.nodes());
    let (state, report) = solve_coupled(&spec, &u, &noise, &grid, &PicardOptions::default())?;

    println!("converged: {} ({} iterations)", report.converged, report.iterations);
    println!("sup |y - x| = {:.3e}", state.y.sup_distance(|_| vec![x]));
    println!("sup |Y - x| = {:.3e}", state.big_y.sup_distance(|_| vec![x]));
    println!("norm z = {:.3e}", field_norm(&state.z, &grid, None)?);
    println!("norm Z = {:.3e}", field_norm(&state.big_z, &grid, None)?);
    println!("norm k = {:.3e}", field_norm(&state.k, &grid, Some(spec.jumps.weights()))?);
    Ok(())
}
