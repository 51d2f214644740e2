//! Discrete-time Q-learning with Boltzmann partner and action selection.
//!
//! Updates use expected rewards: every agent moves every `Q_xy^i` toward
//! `R_xy^i = sum_j A_ij p_yx^j` at rate `alpha`, all agents at once. In the
//! scaled time `t = alpha * beta * steps` the resulting policies approach the
//! joint replicator flow as `alpha -> 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Matrix2;
use crate::state::{partners, CoevolState, JointStrategy};

/// Default learning rate.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Half-width of the uniform initial Q distribution.
pub const INIT_Q_RANGE: f64 = 0.1;

const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QState {
    alpha: f64,
    temperature: f64,
    /// `q[x][y][i]`; the diagonal is unused and kept at zero.
    q: Vec<Vec<[f64; 2]>>,
}

impl QState {
    pub fn new(q: Vec<Vec<[f64; 2]>>, alpha: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidMode(format!(
                "Boltzmann selection needs a finite temperature > 0, got {temperature}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("learning rate {alpha} must lie in (0, 1]")));
        }
        let n = q.len();
        if n < 2 || q.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("Q table must be n x n x 2 with n >= 2".into()));
        }
        if q.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("Q table contains non-finite values".into()));
        }
        Ok(Self { alpha, temperature, q })
    }

    /// Q values drawn uniformly from `[-0.1, 0.1]`.
    pub fn random(n: usize, alpha: f64, temperature: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        if x == y {
                            [0.0; 2]
                        } else {
                            [rng.gen_range(-INIT_Q_RANGE..=INIT_Q_RANGE), rng.gen_range(-INIT_Q_RANGE..=INIT_Q_RANGE)]
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(q, alpha, temperature)
    }

    /// Q table whose Boltzmann policy is exactly `joint`: `Q = T ln q`.
    pub fn from_joint(joint: &JointStrategy, alpha: f64, temperature: f64) -> Result<Self> {
        let n = joint.n();
        let mut q = vec![vec![[0.0; 2]; n]; n];
        for x in 0..n {
            for y in partners(n, x) {
                for i in 0..2 {
                    let v = joint.get(x, y)[i];
                    if !(v > 0.0) {
                        return Err(Error::ChartDomain("policy entries must be positive".into()));
                    }
                    q[x][y][i] = temperature * v.ln();
                }
            }
        }
        Self::new(q, alpha, temperature)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn values(&self) -> &[Vec<[f64; 2]>] {
        &self.q
    }

    /// Softmax of `Q_xy^i / T` over every (partner, action) pair of `x`.
    pub fn policy(&self, x: usize) -> Vec<[f64; 2]> {
        let n = self.n();
        let beta = 1.0 / self.temperature;
        let max = partners(n, x)
            .flat_map(|y| self.q[x][y])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut row = vec![[0.0; 2]; n];
        let mut total = 0.0;
        for y in partners(n, x) {
            for i in 0..2 {
                let e = (beta * (self.q[x][y][i] - max)).exp();
                row[y][i] = e;
                total += e;
            }
        }
        row.iter_mut().flatten().for_each(|v| *v /= total);
        row
    }

    pub fn policies(&self) -> JointStrategy {
        JointStrategy::new((0..self.n()).map(|x| self.policy(x)).collect()).expect("shape fixed at construction")
    }

    /// One synchronous expected-reward update of every Q value.
    pub fn step(&self, payoff: &Matrix2) -> QState {
        let pol = self.policies();
        let n = self.n();
        let mut q = self.q.clone();
        for x in 0..n {
            for y in partners(n, x) {
                for i in 0..2 {
                    let r = expected_reward(&pol, x, y, i, payoff);
                    q[x][y][i] += self.alpha * (r - q[x][y][i]);
                }
            }
        }
        QState { q, ..*self }
    }

    fn max_abs(&self) -> f64 {
        self.q.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mean reward `sum_j A_ij p_yx^j` of `x` playing action `i` with `y`. Zero
/// when `y` never picks `x`: an isolated agent earns nothing.
pub fn expected_reward(policies: &JointStrategy, x: usize, y: usize, i: usize, payoff: &Matrix2) -> f64 {
    let to_x = policies.get(y, x);
    payoff[i][0] * to_x[0] + payoff[i][1] * to_x[1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySample {
    pub step: usize,
    /// Scaled time `alpha * beta * step`.
    pub t: f64,
    /// Marginal projection `(p, c)` of the policies.
    pub state: CoevolState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QRun {
    pub alpha: f64,
    pub temperature: f64,
    pub trace: Vec<PolicySample>,
    pub final_q: QState,
    pub final_policy: JointStrategy,
    pub final_projection: CoevolState,
}

/// Iterates [`QState::step`] `steps` times, projecting the policies every
/// `stride` steps (and always at the start and end).
pub fn run(qs0: &QState, payoff: &Matrix2, steps: usize, stride: usize) -> Result<QRun> {
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be at least 1".into()));
    }
    let scale = qs0.alpha / qs0.temperature;
    let sample = |k: usize, qs: &QState| PolicySample { step: k, t: scale * k as f64, state: qs.policies().marginals() };
    let mut qs = qs0.clone();
    let mut trace = vec![sample(0, &qs)];
    for k in 1..=steps {
        qs = qs.step(payoff);
        if qs.max_abs() > DIVERGENCE_LIMIT || qs.q.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("Q values diverged at step {k}")));
        }
        if k % stride == 0 || k == steps {
            trace.push(sample(k, &qs));
        }
    }
    let final_policy = qs.policies();
    Ok(QRun {
        alpha: qs.alpha,
        temperature: qs.temperature,
        trace,
        final_projection: final_policy.marginals(),
        final_policy,
        final_q: qs,
    })
}
