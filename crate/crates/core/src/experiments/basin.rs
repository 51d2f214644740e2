use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::census::{motif_census, MotifCensus, DEFAULT_RECIPROCITY};
use crate::dynamics::{integrate, FlowParams, IntegrationControls};
use crate::error::{Error, Result};
use crate::game::PayoffSpec;
use crate::seed::item_rng;
use crate::state::CoevolState;

/// Scaled-time budget before a trial is declared non-convergent.
pub const DEFAULT_HORIZON: f64 = 1e5;
/// Largest raw flow residual accepted for a converged final state.
pub const FINAL_RESIDUAL: f64 = 1e-6;
/// Interior margin of the random initial states.
const START_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinOptions {
    pub horizon: f64,
    pub controls: IntegrationControls,
    pub reciprocity_threshold: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            controls: IntegrationControls::default(),
            reciprocity_threshold: DEFAULT_RECIPROCITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub initial: CoevolState,
    pub final_state: CoevolState,
    pub residual: f64,
    pub converged: bool,
    /// Census of the final state, present for converged trials.
    pub census: Option<MotifCensus>,
    /// Integration error, if the trial failed outright.
    pub error: Option<String>,
}

/// Frequency of one census outcome among converged trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFrequency {
    pub signature: String,
    pub count: usize,
    pub frequency: f64,
    /// Binomial standard error `sqrt(f (1 - f) / N)`.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinTable {
    pub trials: usize,
    pub converged: usize,
    pub non_converged: usize,
    /// Outcomes sorted by descending count, then signature.
    pub outcomes: Vec<OutcomeFrequency>,
    /// Number of star-like motifs (pairs count as size 2) by size, summed
    /// over converged trials.
    pub motifs_by_size: BTreeMap<usize, usize>,
    /// Converged trials whose census consists only of pairs, stars and
    /// isolated agents.
    pub star_partitions: usize,
    pub trial_outcomes: Vec<TrialOutcome>,
}

impl BasinTable {
    pub fn frequency_of(&self, signature: &str) -> f64 {
        self.outcomes.iter().find(|o| o.signature == signature).map_or(0.0, |o| o.frequency)
    }

    /// The most frequent outcome.
    pub fn dominant(&self) -> Option<&OutcomeFrequency> {
        self.outcomes.first()
    }
}

fn run_trial(fp: &FlowParams, n: usize, seed: u64, trial: usize, opts: &BasinOptions) -> Result<TrialOutcome> {
    let mut rng = item_rng(seed, "basin", trial as u64);
    let initial = CoevolState::random_interior_with(n, &mut rng, START_MARGIN)?;
    let outcome = match integrate(&initial, fp, opts.horizon, &opts.controls) {
        Ok(traj) => {
            let residual = traj.final_raw_residual(fp);
            let final_state = traj.final_state().clone();
            // slow chart drift far out towards the boundary can outlast the horizon
            // although the raw state has long stopped moving
            let converged = residual < FINAL_RESIDUAL && final_state.is_valid();
            let census = converged.then(|| motif_census(&final_state, opts.reciprocity_threshold));
            TrialOutcome { trial, initial, final_state, residual, converged, census, error: None }
        }
        Err(e @ (Error::Stiffness { .. } | Error::Numerical(_))) => TrialOutcome {
            trial,
            final_state: initial.clone(),
            initial,
            residual: f64::NAN,
            converged: false,
            census: None,
            error: Some(e.to_string()),
        },
        Err(e) => return Err(e),
    };
    Ok(outcome)
}

/// Integrates from `trials` random interior states and tabulates the motif
/// census of every converged final state.
///
/// Trial `k` starts from a state drawn with a seed derived from `(seed, k)`,
/// so results do not depend on how trials are spread over threads.
pub fn basin_sample(
    game: &PayoffSpec,
    n: usize,
    temperature: f64,
    trials: usize,
    seed: u64,
    opts: &BasinOptions,
) -> Result<BasinTable> {
    if trials == 0 {
        return Err(Error::InvalidInput("basin sampling needs at least one trial".into()));
    }
    let fp = FlowParams::from_payoff(game, temperature)?;
    let trial_outcomes = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(&fp, n, seed, k, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut motifs_by_size = BTreeMap::new();
    let mut star_partitions = 0;
    let mut converged = 0;
    for census in trial_outcomes.iter().filter_map(|t| t.census.as_ref()) {
        converged += 1;
        *counts.entry(census.signature()).or_insert(0) += 1;
        if census.is_star_partition() {
            star_partitions += 1;
        }
        for size in census.components.iter().filter_map(|c| c.label.star_size()) {
            *motifs_by_size.entry(size).or_insert(0) += 1;
        }
    }
    let total = converged.max(1) as f64;
    let mut outcomes: Vec<OutcomeFrequency> = counts
        .into_iter()
        .map(|(signature, count)| {
            let f = count as f64 / total;
            OutcomeFrequency { signature, count, frequency: f, std_error: (f * (1.0 - f) / total).sqrt() }
        })
        .collect();
    outcomes.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.signature.cmp(&b.signature)));

    Ok(BasinTable {
        trials,
        converged,
        non_converged: trials - converged,
        outcomes,
        motifs_by_size,
        star_partitions,
        trial_outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd(c_iso: f64) -> PayoffSpec {
        PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], c_iso).unwrap()
    }

    #[test]
    fn single_trial_is_reproducible() {
        let opts = BasinOptions::default();
        let a = basin_sample(&pd(0.0), 3, 0.05, 1, 11, &opts).unwrap();
        let b = basin_sample(&pd(0.0), 3, 0.05, 1, 11, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials, 1);
    }

    #[test]
    fn converged_states_are_rest_points() {
        let table = basin_sample(&pd(0.0), 3, 0.05, 8, 2, &BasinOptions::default()).unwrap();
        assert!(table.converged > 0);
        for t in table.trial_outcomes.iter().filter(|t| t.converged) {
            assert!(t.final_state.is_valid());
            assert!(t.residual < FINAL_RESIDUAL);
        }
        let total: f64 = table.outcomes.iter().map(|o| o.frequency).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(basin_sample(&pd(0.0), 3, 0.1, 0, 0, &BasinOptions::default()).is_err());
    }
}
