//! Which motifs five prisoner's-dilemma agents settle into from random
//! starts at low temperature.
//!
//! `cargo run --release --example motif_census`

use coevo::experiments::{basin_sample, BasinOptions};
use coevo::PayoffSpec;

fn main() -> coevo::Result<()> {
    let pd = PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], 0.0)?;
    let table = basin_sample(&pd, 5, 0.01, 200, 0, &BasinOptions::default())?;
    println!("{} of {} trials converged", table.converged, table.trials);
    for o in &table.outcomes {
        println!("{:>24}  {:5.1}% +- {:.1}", o.signature, 100.0 * o.frequency, 100.0 * o.std_error);
    }
    println!("star-like motifs by size: {:?}", table.motifs_by_size);
    println!("pure star partitions: {}", table.star_partitions);
    Ok(())
}
