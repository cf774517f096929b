//! Loads a problem from a TOML file (default `configs/example31.toml`),
//! solves it under the centre of its control set and prints the cost.

use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::load_problem_config;
use fbdsde::optimize::estimate_cost;
use fbdsde::solver::{ControlProcess, PicardOptions};

fn main() -> fbdsde::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example31.toml").to_string());
    let spec = load_problem_config(&path)?;
    println!("{spec:?}");
    let grid = TimeGrid::new(50, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, 500, &spec.dims, &spec.jumps, 7)?;
    let u = ControlProcess::constant(&spec.controls, &spec.controls.center(), grid.nodes());
    let cost = estimate_cost(&spec, &u, &noise, &grid, &PicardOptions::default())?;
    println!("J = {:.6} (SE {:.1e})", cost.value, cost.se);
    Ok(())
}
