//! Integrates one trajectory of the coupled dynamics and writes it as CSV.
//!
//! `cargo run --example trajectory -- [out.csv]`

use coevo::dynamics::{integrate, FlowParams, IntegrationControls};
use coevo::experiments::{motif_census, DEFAULT_RECIPROCITY};
use coevo::io::write_trajectory_csv;
use coevo::{CoevolState, PayoffSpec};

fn main() -> coevo::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "trajectory.csv".into());
    let game = PayoffSpec::new([[4.0, -2.0], [1.0, 0.0]], 0.0)?;
    let fp = FlowParams::from_payoff(&game, 0.1)?;
    let start = CoevolState::random_interior(4, 2, 1e-3)?;
    let controls = IntegrationControls { sample_stride: Some(1.0), ..Default::default() };
    let traj = integrate(&start, &fp, 500.0, &controls)?;

    let end = traj.final_state();
    println!(
        "t = {:.1}, converged: {}, residual {:.1e}",
        traj.final_time(),
        traj.converged,
        traj.final_raw_residual(&fp)
    );
    println!("p = {:.4?}", end.p());
    println!("motifs: {}", motif_census(end, DEFAULT_RECIPROCITY).signature());
    write_trajectory_csv(path.as_ref(), &traj)?;
    println!("wrote {} samples to {path}", traj.samples.len());
    Ok(())
}
