//! Runs the full sufficiency audit of `u ≡ 0` on the monotone-dissipative
//! instance with three probe controls.

use fbdsde::audit::{sufficiency_verdict, VerdictOptions};
use fbdsde::cli::verdict_table;
use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::catalog_lookup;
use fbdsde::solver::ControlProcess;

fn main() -> fbdsde::Result<()> {
    let spec = catalog_lookup("monotone-dissipative")?;
    let grid = TimeGrid::new(25, spec.horizon)?;
    let noise = NoiseBundle::sample(&grid, 400, &spec.dims, &spec.jumps, 3)?;
    let u = ControlProcess::constant(&spec.controls, &[0.0], grid.nodes());
    let probes: Vec<_> = [0.5, -0.5, 1.0]
        .iter()
        .map(|v| (format!("{v}"), ControlProcess::constant(&spec.controls, &[*v], grid.nodes())))
        .collect();
    let verdict = sufficiency_verdict(&spec, &u, &probes, &noise, &grid, &VerdictOptions::default())?;
    for line in verdict_table(&verdict) {
        println!("{line}");
    }
    Ok(())
}
