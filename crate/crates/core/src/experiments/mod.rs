//! Sweeps, motif censuses, basin sampling and learning-versus-flow checks.

mod basin;
mod census;
mod consistency;
mod sweep;

pub use basin::{
    basin_sample, BasinOptions, BasinTable, OutcomeFrequency, TrialOutcome, DEFAULT_HORIZON, FINAL_RESIDUAL,
};
pub use census::{motif_census, Component, MotifCensus, MotifLabel, DEFAULT_RECIPROCITY, SERVED_WEIGHT};
pub use consistency::{discrete_continuous_gap, joint_flow_path, ConsistencyReport, GapRow};
pub use sweep::{
    sweep_plane, sweep_temperature, Axis, BoundaryRow, StabilityRegion, SweepEntry, SweepPoint, SweepResult,
    SymmetricRoot,
};
