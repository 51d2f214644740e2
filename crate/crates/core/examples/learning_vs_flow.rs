//! Boltzmann Q-learning approaches the replicator flow as the learning rate
//! shrinks: the sup-norm gap falls roughly in proportion to alpha.
//!
//! `cargo run --release --example learning_vs_flow`

use coevo::agents::{run, QState};
use coevo::experiments::discrete_continuous_gap;
use coevo::game::effective_matrix;
use coevo::PayoffSpec;

fn main() -> coevo::Result<()> {
    let pd = PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], 0.0)?;
    let report = discrete_continuous_gap(&pd, 3, 0.2, &[0.1, 0.03, 0.01], 20.0, 0)?;
    println!("alpha    steps   sup gap   gap/alpha");
    for r in &report.rows {
        println!("{:<8} {:<7} {:.5}   {:.3}", r.alpha, r.steps, r.sup_gap, r.gap_per_alpha);
    }
    println!("monotone: {}, spread of gap/alpha: {:.2}", report.monotone(), report.first_order_spread());

    // a plain learning run from random Q values
    let payoff = effective_matrix(&pd)?;
    let qs = QState::random(3, 0.05, 0.2, 11)?;
    let trace = run(&qs, &payoff, 5_000, 1_000)?;
    for s in &trace.trace {
        println!("step {:5}: p = {:.3?}", s.step, s.state.p());
    }
    Ok(())
}
