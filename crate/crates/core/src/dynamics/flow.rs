use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Matrix2, PayoffSpec, ReducedGame};
use crate::state::{last_partner, partners, CoevolState, JointStrategy, LogitCoords};

/// Parameters of the two-action flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub game: ReducedGame,
    /// Effective `a22 = b22 + C_I`.
    pub a22: f64,
    /// Exploration temperature `T = 1/beta`.
    pub temperature: f64,
}

impl FlowParams {
    pub fn new(game: ReducedGame, a22: f64, temperature: f64) -> Result<Self> {
        let finite = [game.a, game.b, game.d, a22, temperature].iter().all(|v| v.is_finite());
        if !finite || temperature < 0.0 {
            return Err(Error::InvalidInput(format!(
                "flow parameters must be finite with T >= 0 (game {game:?}, a22 {a22}, T {temperature})"
            )));
        }
        Ok(Self { game, a22, temperature })
    }

    pub fn from_payoff(spec: &PayoffSpec, temperature: f64) -> Result<Self> {
        Self::new(spec.reduced()?, spec.a22(), temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.game, self.a22, temperature)
    }

    pub fn with_a22(&self, a22: f64) -> Result<Self> {
        Self::new(self.game, a22, self.temperature)
    }

    /// Reward `r_xy = c_yx (a px py + b px + d py + a22)`.
    #[inline]
    pub fn link_reward(&self, px: f64, py: f64, c_yx: f64) -> f64 {
        c_yx * self.game.pair_payoff(px, py, self.a22)
    }
}

/// Time derivative of a [`CoevolState`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub dp: Vec<f64>,
    pub dc: Vec<Vec<f64>>,
}

impl StateDerivative {
    pub fn max_norm(&self) -> f64 {
        self.dp.iter().chain(self.dc.iter().flatten()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same layout as [`CoevolState::flat_values`].
    pub fn flat(&self) -> Vec<f64> {
        let n = self.dp.len();
        let mut out = self.dp.clone();
        for x in 0..n {
            out.extend(partners(n, x).map(|y| self.dc[x][y]));
        }
        out
    }

    /// Same layout as [`CoevolState::free_coordinates`].
    pub fn free_components(&self) -> Vec<f64> {
        let n = self.dp.len();
        let mut out = Vec::with_capacity(n * (n - 1));
        for x in 0..n {
            out.extend(partners(n, x).take(n - 2).map(|y| self.dc[x][y]));
        }
        out.extend_from_slice(&self.dp);
        out
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.dc[x].iter().sum()
    }
}

fn check_chart(s: &CoevolState, fp: &FlowParams) -> Result<()> {
    if fp.temperature > 0.0 && !s.is_interior() {
        return Err(Error::ChartDomain(format!(
            "T = {} needs a strictly interior state",
            fp.temperature
        )));
    }
    Ok(())
}

/// Coupled replicator field for `n` agents and two actions.
///
/// ```text
/// dp_x/dt = p_x (1-p_x) [ sum_y (a p_y + b) c_xy c_yx + T ln((1-p_x)/p_x) ]
/// dc_xy/dt = c_xy [ r_xy - R_x + T sum_y' c_xy' ln(c_xy'/c_xy) ]
/// ```
/// with `r_xy = c_yx (a p_x p_y + b p_x + d p_y + a22)` and
/// `R_x = sum_y c_xy r_xy`. Each row of `dc` sums to zero.
pub fn flow_two_action(s: &CoevolState, fp: &FlowParams) -> Result<StateDerivative> {
    check_chart(s, fp)?;
    Ok(field_unchecked(s, fp))
}

/// The field without domain checks. At `T = 0` it is a polynomial and may be
/// evaluated anywhere; at `T > 0` boundary states yield non-finite values.
pub(crate) fn field_unchecked(s: &CoevolState, fp: &FlowParams) -> StateDerivative {
    let n = s.n();
    let (p, c) = (s.p(), s.c());
    let g = fp.game;
    let t = fp.temperature;

    let dp = (0..n)
        .map(|x| {
            let drive: f64 = partners(n, x)
                .map(|y| g.action_advantage(p[y]) * c[x][y] * c[y][x])
                .sum();
            let explore = if t > 0.0 { t * ((1.0 - p[x]) / p[x]).ln() } else { 0.0 };
            p[x] * (1.0 - p[x]) * (drive + explore)
        })
        .collect();

    let dc = (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            let rewards: Vec<(usize, f64)> = partners(n, x)
                .map(|y| (y, fp.link_reward(p[x], p[y], c[y][x])))
                .collect();
            let mean: f64 = rewards.iter().map(|&(y, r)| c[x][y] * r).sum();
            let (entropy, mass) = if t > 0.0 {
                partners(n, x).fold((0.0, 0.0), |(h, m), y| (h + c[x][y] * c[x][y].ln(), m + c[x][y]))
            } else {
                (0.0, 0.0)
            };
            for (y, r) in rewards {
                let explore = if t > 0.0 { t * (entropy - mass * c[x][y].ln()) } else { 0.0 };
                row[y] = c[x][y] * (r - mean + explore);
            }
            row
        })
        .collect();

    StateDerivative { dp, dc }
}

/// Independent-coordinate field: link block then strategy block, matching
/// [`CoevolState::free_coordinates`].
pub fn free_flow(n: usize, z: &[f64], fp: &FlowParams) -> Result<Vec<f64>> {
    let s = CoevolState::from_free_coordinates(n, z)?;
    let field = field_unchecked(&s, fp).free_components();
    if field.iter().any(|v| !v.is_finite()) {
        return Err(Error::ChartDomain(format!(
            "field is not finite at the requested point (T = {})",
            fp.temperature
        )));
    }
    Ok(field)
}

/// Explicit three-player system in the independent variables
/// `(p_x, p_y, p_z, c_xy, c_yz, c_zx)`, agents `x, y, z = 0, 1, 2`.
///
/// The complementary links are `c_xz = 1 - c_xy`, `c_yx = 1 - c_yz`,
/// `c_zy = 1 - c_zx`, and the effective pair weights are
/// `w_xy = c_xy (1 - c_yz)`, `w_xz = (1 - c_xy) c_zx`, `w_yz = c_yz (1 - c_zx)`.
pub fn flow_three_player(s: &CoevolState, fp: &FlowParams) -> Result<[f64; 6]> {
    if s.n() != 3 {
        return Err(Error::InvalidInput(format!("three-player flow needs n = 3, got {}", s.n())));
    }
    check_chart(s, fp)?;
    let (a, b, d, a22, t) = (fp.game.a, fp.game.b, fp.game.d, fp.a22, fp.temperature);
    let (px, py, pz) = (s.p()[0], s.p()[1], s.p()[2]);
    let (cxy, cyz, czx) = (s.link(0, 1), s.link(1, 2), s.link(2, 0));
    let (cxz, cyx, czy) = (1.0 - cxy, 1.0 - cyz, 1.0 - czx);

    let wxy = cxy * (1.0 - cyz);
    let wxz = (1.0 - cxy) * czx;
    let wyz = cyz * (1.0 - czx);

    // r_uv = c_vu (a p_u p_v + b p_u + d p_v + a22)
    let r = |pu: f64, pv: f64, c_vu: f64| c_vu * (a * pu * pv + b * pu + d * pv + a22);
    let r_xy = r(px, py, cyx);
    let r_xz = r(px, pz, czx);
    let r_yz = r(py, pz, czy);
    let r_yx = r(py, px, cxy);
    let r_zx = r(pz, px, cxz);
    let r_zy = r(pz, py, cyz);

    let log_odds = |v: f64| if t > 0.0 { t * ((1.0 - v) / v).ln() } else { 0.0 };

    Ok([
        px * (1.0 - px) * ((a * py + b) * wxy + (a * pz + b) * wxz + log_odds(px)),
        py * (1.0 - py) * ((a * pz + b) * wyz + (a * px + b) * wxy + log_odds(py)),
        pz * (1.0 - pz) * ((a * px + b) * wxz + (a * py + b) * wyz + log_odds(pz)),
        cxy * (1.0 - cxy) * (r_xy - r_xz + log_odds(cxy)),
        cyz * (1.0 - cyz) * (r_yz - r_yx + log_odds(cyz)),
        czx * (1.0 - czx) * (r_zx - r_zy + log_odds(czx)),
    ])
}

/// Time derivative of a [`JointStrategy`].
#[derive(Clone, Debug, PartialEq)]
pub struct JointField {
    pub dq: Vec<Vec<[f64; 2]>>,
}

impl JointField {
    /// Marginal derivatives `dc_xy = sum_i dq_xy^i`, `dp_x = sum_y dq_xy^1`.
    pub fn marginals(&self) -> StateDerivative {
        let n = self.dq.len();
        let dc = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 0.0 } else { self.dq[x][y][0] + self.dq[x][y][1] }).collect())
            .collect();
        let dp = (0..n).map(|x| partners(n, x).map(|y| self.dq[x][y][0]).sum()).collect();
        StateDerivative { dp, dc }
    }

    pub fn max_norm(&self) -> f64 {
        self.dq.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Replicator field over joint (partner, action) strategies:
///
/// ```text
/// dq_xy^i / q_xy^i = sum_j A_ij q_yx^j - sum_{y',i',j} A_i'j q_xy'^i' q_y'x^j
///                    + T sum_{y',j} q_xy'^j ln(q_xy'^j / q_xy^i)
/// ```
pub fn flow_joint(q: &JointStrategy, payoff: &Matrix2, temperature: f64) -> Result<JointField> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidInput(format!("temperature {temperature} must be finite and >= 0")));
    }
    let n = q.n();
    let rows = q.rows();
    if temperature > 0.0 {
        let boundary = (0..n).any(|x| partners(n, x).any(|y| rows[x][y].iter().any(|&v| v <= 0.0)));
        if boundary {
            return Err(Error::ChartDomain("joint strategy touches the boundary at T > 0".into()));
        }
    }
    let dq = (0..n)
        .map(|x| {
            let reward = |y: usize, i: usize| -> f64 {
                (0..2).map(|j| payoff[i][j] * rows[y][x][j]).sum()
            };
            let mut mean = 0.0;
            let mut entropy = 0.0;
            for y in partners(n, x) {
                for i in 0..2 {
                    mean += rows[x][y][i] * reward(y, i);
                    if temperature > 0.0 {
                        entropy += rows[x][y][i] * rows[x][y][i].ln();
                    }
                }
            }
            let mut out = vec![[0.0; 2]; n];
            for y in partners(n, x) {
                for i in 0..2 {
                    let qi = rows[x][y][i];
                    let explore = if temperature > 0.0 { temperature * (entropy - qi.ln()) } else { 0.0 };
                    out[y][i] = qi * (reward(y, i) - mean + explore);
                }
            }
            out
        })
        .collect();
    Ok(JointField { dq })
}

/// Velocity of the logit chart, `du/dt` for `u` = [`LogitCoords`].
///
/// For strategies `du_x/dt = sum_y (a p_y + b) c_xy c_yx - T u_x`; for links
/// `du_xy/dt = r_xy - r_x,last - T u_xy`. It has the same zeros as the raw
/// field on the interior and stays well conditioned near the boundary.
pub fn logit_field(u: &LogitCoords, fp: &FlowParams) -> Vec<f64> {
    logit_field_slice(u.n(), u.values(), fp)
}

pub(crate) fn logit_field_slice(n: usize, values: &[f64], fp: &FlowParams) -> Vec<f64> {
    let coords = LogitCoords::new(n, values.to_vec()).expect("chart length checked by caller");
    let p: Vec<f64> = (0..n).map(|x| coords.strategy_pair(x).0).collect();
    let c: Vec<Vec<f64>> = (0..n).map(|x| coords.link_row(x)).collect();
    let t = fp.temperature;
    let links = n * (n - 2);
    let mut out = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        let last = last_partner(n, x);
        let r_last = fp.link_reward(p[x], p[last], c[last][x]);
        for (k, y) in partners(n, x).take(n - 2).enumerate() {
            let r = fp.link_reward(p[x], p[y], c[y][x]);
            out.push(r - r_last - t * values[x * (n - 2) + k]);
        }
    }
    for x in 0..n {
        let drive: f64 = partners(n, x)
            .map(|y| fp.game.action_advantage(p[y]) * c[x][y] * c[y][x])
            .sum();
        out.push(drive - t * values[links + x]);
    }
    out
}

/// Raw field recovered from the chart velocity without taking logarithms of
/// tiny coordinates: `dp = p(1-p) du_p`, `dc_xy = c_xy (du_xy - sum_y' c_xy' du_xy')`.
pub fn raw_field_from_logits(u: &LogitCoords, fp: &FlowParams) -> StateDerivative {
    let n = u.n();
    let v = logit_field(u, fp);
    let links = n * (n - 2);
    let dp = (0..n)
        .map(|x| {
            let (p, q) = u.strategy_pair(x);
            p * q * v[links + x]
        })
        .collect();
    let dc = (0..n)
        .map(|x| {
            let row = u.link_row(x);
            let mut velocity = vec![0.0; n];
            for (k, y) in partners(n, x).take(n - 2).enumerate() {
                velocity[y] = v[x * (n - 2) + k];
            }
            let mean: f64 = (0..n).map(|y| row[y] * velocity[y]).sum();
            (0..n)
                .map(|y| if y == x { 0.0 } else { row[y] * (velocity[y] - mean) })
                .collect()
        })
        .collect();
    StateDerivative { dp, dc }
}
