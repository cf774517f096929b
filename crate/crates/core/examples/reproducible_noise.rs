//! Noise bundles are a pure function of the seed: two samples agree bit for
//! bit, and a binary dump reads back unchanged.

use fbdsde::kernel::{NoiseBundle, TimeGrid};
use fbdsde::model::example31;

fn main() -> fbdsde::Result<()> {
    let spec = example31(1.0);
    let grid = TimeGrid::new(50, 1.0)?;
    let a = NoiseBundle::sample(&grid, 1000, &spec.dims, &spec.jumps, 42)?;
    let b = NoiseBundle::sample(&grid, 1000, &spec.dims, &spec.jumps, 42)?;
    let c = NoiseBundle::sample(&grid, 1000, &spec.dims, &spec.jumps, 43)?;
    println!("same seed identical: {}", a == b);
    println!("different seed identical: {}", a == c);

    let mut dump = Vec::new();
    a.write_to(&mut dump)?;
    let back = NoiseBundle::read_from(&mut dump.as_slice())?;
    println!("dump of {} bytes round-trips: {}", dump.len(), back == a);
    Ok(())
}
