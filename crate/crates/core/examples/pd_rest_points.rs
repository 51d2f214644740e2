//! Every rest point of the three-player prisoner's dilemma without
//! exploration, grouped by network topology and stability verdict.
//!
//! `cargo run --release --example pd_rest_points`

use std::collections::BTreeMap;

use coevo::analysis::{classify_stability, find_rest_points};
use coevo::dynamics::FlowParams;
use coevo::PayoffSpec;

fn main() -> coevo::Result<()> {
    let game = PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], 0.0)?;
    let fp = FlowParams::from_payoff(&game, 0.0)?;
    let search = find_rest_points(&fp, 3, 20, 1)?;
    println!("{} rest points ({} starts dropped)", search.points.len(), search.dropped);

    let mut table: BTreeMap<String, usize> = BTreeMap::new();
    for rp in &search.points {
        let report = classify_stability(rp, &fp)?;
        *table.entry(format!("{} / {}", report.matched_configuration, report.classification)).or_default() += 1;
    }
    for (key, count) in &table {
        println!("{count:4}  {key}");
    }

    // one marginally stable pair, shown in full
    for rp in &search.points {
        let report = classify_stability(rp, &fp)?;
        if report.classification == coevo::analysis::Classification::MarginallyStable {
            println!("\nexample: p = {:?}", rp.state.p());
            for row in rp.state.c() {
                println!("  c row {row:?}");
            }
            println!("  spectrum {:?}", report.eigenvalues);
            break;
        }
    }
    Ok(())
}
