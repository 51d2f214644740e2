//! Where in the (T, C_I) plane the uniform network of the coordination game
//! is stable, printed as a coarse character map.
//!
//! `cargo run --release --example stability_region`

use coevo::experiments::{sweep_plane, Axis};
use coevo::PayoffSpec;

fn main() -> coevo::Result<()> {
    let base = PayoffSpec::new([[4.0, -2.0], [1.0, 0.0]], 0.0)?;
    let t = Axis::linspace("temperature", 0.02, 1.0, 25)?.values;
    let ci = Axis::linspace("c_iso", -6.0, 2.0, 81)?.values;
    let result = sweep_plane(&base, 3, &t, &ci)?;
    let region = result.region.expect("plane sweeps build a region");

    println!("C_I from {} to {}; '#' marks a stable cell", ci[0], ci[ci.len() - 1]);
    for (i, row) in region.mask.iter().enumerate().rev() {
        let line: String = row.iter().map(|&m| if m { '#' } else { '.' }).collect();
        println!("T = {:.2} {line}", t[i]);
    }
    println!("{} component(s)", region.components);
    for row in region.boundary.iter().step_by(6) {
        println!("T = {:.2}: C_I in [{:.2}, {:.2}]", row.temperature, row.c_iso_min, row.c_iso_max);
    }
    Ok(())
}
