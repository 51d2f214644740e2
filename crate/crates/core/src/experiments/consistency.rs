use serde::{Deserialize, Serialize};

use crate::agents::QState;
use crate::dynamics::flow_joint;
use crate::error::{Error, Result};
use crate::game::{effective_matrix, Matrix2, PayoffSpec};
use crate::seed::item_rng;
use crate::state::{partners, CoevolState, JointStrategy};

/// Largest RK4 step used for the reference flow.
const MAX_FLOW_STEP: f64 = 5e-3;
/// Interior margin of the random initial state.
const START_MARGIN: f64 = 0.05;

/// Sup-norm distance between the learning trace and the flow for one rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub alpha: f64,
    pub steps: usize,
    /// Largest max-norm difference of the `(p, c)` projections over the run.
    pub sup_gap: f64,
    /// `sup_gap / alpha`; roughly constant when the gap is first order.
    pub gap_per_alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub temperature: f64,
    pub horizon: f64,
    pub initial: CoevolState,
    pub rows: Vec<GapRow>,
}

impl ConsistencyReport {
    /// Whether the gap shrinks strictly as the rate does (rows in the order
    /// given, which should be decreasing in `alpha`).
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap)
    }

    /// Spread `max / min` of `sup_gap / alpha` across the rates.
    pub fn first_order_spread(&self) -> f64 {
        let ratios = self.rows.iter().map(|r| r.gap_per_alpha);
        let max = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.fold(f64::INFINITY, f64::min);
        max / min
    }
}

fn exp_rows(logq: &[Vec<[f64; 2]>]) -> JointStrategy {
    let rows = logq
        .iter()
        .enumerate()
        .map(|(x, row)| {
            row.iter().enumerate().map(|(y, v)| if x == y { [0.0; 2] } else { [v[0].exp(), v[1].exp()] }).collect()
        })
        .collect();
    JointStrategy::new(rows).expect("shape unchanged")
}

/// `d ln q / dt` of the joint flow.
fn log_rhs(logq: &[Vec<[f64; 2]>], payoff: &Matrix2, temperature: f64) -> Result<Vec<Vec<[f64; 2]>>> {
    let q = exp_rows(logq);
    let field = flow_joint(&q, payoff, temperature)?;
    let n = q.n();
    Ok((0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        [0.0; 2]
                    } else {
                        let qxy = q.get(x, y);
                        [field.dq[x][y][0] / qxy[0], field.dq[x][y][1] / qxy[1]]
                    }
                })
                .collect()
        })
        .collect())
}

fn axpy(base: &[Vec<[f64; 2]>], k: &[Vec<[f64; 2]>], h: f64) -> Vec<Vec<[f64; 2]>> {
    base.iter()
        .zip(k)
        .map(|(rb, rk)| rb.iter().zip(rk).map(|(b, d)| [b[0] + h * d[0], b[1] + h * d[1]]).collect())
        .collect()
}

/// Samples the joint replicator flow from `q0` at times `0, dt, 2 dt, ...`
/// (`count` samples) and returns their `(p, c)` projections. The flow is
/// advanced with classical RK4 in `ln q`, which keeps every entry positive.
pub fn joint_flow_path(
    q0: &JointStrategy,
    payoff: &Matrix2,
    temperature: f64,
    dt: f64,
    count: usize,
) -> Result<Vec<CoevolState>> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidMode("the joint flow reference needs T > 0".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("sample interval {dt} must be positive")));
    }
    let n = q0.n();
    if (0..n).any(|x| partners(n, x).any(|y| q0.get(x, y).iter().any(|&v| v <= 0.0))) {
        return Err(Error::ChartDomain("joint flow reference needs an interior start".into()));
    }
    let mut logq: Vec<Vec<[f64; 2]>> = q0
        .rows()
        .iter()
        .enumerate()
        .map(|(x, row)| {
            row.iter().enumerate().map(|(y, v)| if x == y { [0.0; 2] } else { [v[0].ln(), v[1].ln()] }).collect()
        })
        .collect();
    let substeps = (dt / MAX_FLOW_STEP).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k > 0 {
            for _ in 0..substeps {
                let k1 = log_rhs(&logq, payoff, temperature)?;
                let k2 = log_rhs(&axpy(&logq, &k1, h / 2.0), payoff, temperature)?;
                let k3 = log_rhs(&axpy(&logq, &k2, h / 2.0), payoff, temperature)?;
                let k4 = log_rhs(&axpy(&logq, &k3, h), payoff, temperature)?;
                for x in 0..n {
                    for y in partners(n, x) {
                        for i in 0..2 {
                            logq[x][y][i] += h / 6.0 * (k1[x][y][i] + 2.0 * k2[x][y][i] + 2.0 * k3[x][y][i] + k4[x][y][i]);
                        }
                    }
                }
            }
            if logq.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("joint flow left the chart near t = {}", k as f64 * dt)));
            }
        }
        out.push(exp_rows(&logq).marginals());
    }
    Ok(out)
}

fn max_gap(a: &CoevolState, b: &CoevolState) -> f64 {
    a.flat_values().iter().zip(b.flat_values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs Q-learning at each rate in `alphas` from the same factorized start
/// `Q = T ln q` and measures the largest distance between the projected
/// policies and the joint replicator flow up to scaled time `horizon`.
///
/// Step `k` of a run at rate `alpha` sits at scaled time `alpha k / T`.
pub fn discrete_continuous_gap(
    game: &PayoffSpec,
    n: usize,
    temperature: f64,
    alphas: &[f64],
    horizon: f64,
    seed: u64,
) -> Result<ConsistencyReport> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("need at least one learning rate".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
    }
    let payoff = effective_matrix(game)?;
    let mut rng = item_rng(seed, "consistency", 0);
    let initial = CoevolState::random_interior_with(n, &mut rng, START_MARGIN)?;
    let joint = JointStrategy::from_state(&initial);

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut qs = QState::from_joint(&joint, alpha, temperature)?;
        let dt = alpha / temperature;
        let steps = (horizon / dt).round().max(1.0) as usize;
        let reference = joint_flow_path(&joint, &payoff, temperature, dt, steps + 1)?;
        let mut sup_gap = max_gap(&qs.policies().marginals(), &reference[0]);
        for target in &reference[1..] {
            qs = qs.step(&payoff);
            sup_gap = sup_gap.max(max_gap(&qs.policies().marginals(), target));
        }
        rows.push(GapRow { alpha, steps, sup_gap, gap_per_alpha: sup_gap / alpha });
    }
    Ok(ConsistencyReport { temperature, horizon, initial, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> PayoffSpec {
        PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], 0.0).unwrap()
    }

    #[test]
    fn flow_path_starts_at_the_projection() {
        let s = CoevolState::random_interior(3, 4, 0.05).unwrap();
        let payoff = effective_matrix(&pd()).unwrap();
        let path = joint_flow_path(&JointStrategy::from_state(&s), &payoff, 0.2, 0.1, 3).unwrap();
        assert_eq!(path.len(), 3);
        assert!(max_gap(&path[0], &s) < 1e-14);
        assert!(path.iter().all(|st| st.validate_with(1e-10).is_empty()));
    }

    #[test]
    fn smaller_rate_tracks_the_flow_better() {
        let report = discrete_continuous_gap(&pd(), 3, 0.2, &[0.1, 0.02], 5.0, 3).unwrap();
        assert!(report.monotone(), "{:?}", report.rows);
    }

    #[test]
    fn zero_temperature_is_rejected() {
        assert!(discrete_continuous_gap(&pd(), 3, 0.0, &[0.1], 1.0, 0).is_err());
    }
}
