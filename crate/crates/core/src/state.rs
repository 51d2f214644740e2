//! Joint state of strategies and link weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance used by [`CoevolState::validate`].
pub const VALIDATION_TOL: f64 = 1e-12;

/// Margin applied when ingesting external states that may touch the boundary.
pub const INGEST_MARGIN: f64 = 1e-9;

/// Strategies `p` and link matrix `c` of `n` agents.
///
/// `p[x]` is the probability that agent `x` plays action 1 and `c[x][y]` the
/// probability that `x` initiates a game with `y`. Rows of `c` sum to one and
/// the diagonal is structurally zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct CoevolState {
    p: Vec<f64>,
    c: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawState {
    n: usize,
    p: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl TryFrom<RawState> for CoevolState {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        if raw.p.len() != raw.n {
            return Err(Error::InvalidInput(format!(
                "n = {} but p has {} entries",
                raw.n,
                raw.p.len()
            )));
        }
        CoevolState::new(raw.p, raw.c)
    }
}

impl From<CoevolState> for RawState {
    fn from(s: CoevolState) -> Self {
        RawState { n: s.n(), p: s.p, c: s.c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonFinite,
    StrategyRange,
    Diagonal,
    NegativeLink,
    RowSum,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::NonFinite => "non-finite",
            ViolationKind::StrategyRange => "strategy-range",
            ViolationKind::Diagonal => "diagonal",
            ViolationKind::NegativeLink => "negative-link",
            ViolationKind::RowSum => "row-sum",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agent: usize,
    /// Size of the violation (distance outside the admissible set).
    pub amount: f64,
}

impl CoevolState {
    /// Builds a state after checking shapes. Simplex constraints are not
    /// enforced here; see [`CoevolState::validate`].
    pub fn new(p: Vec<f64>, c: Vec<Vec<f64>>) -> Result<Self> {
        let n = p.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 agents, got {n}")));
        }
        if c.len() != n || c.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput(format!("link matrix must be {n}x{n}")));
        }
        Ok(Self { p, c })
    }

    /// Every agent plays `p_common` and links uniformly, `c = 1/(n-1)`.
    pub fn symmetric(n: usize, p_common: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 agents, got {n}")));
        }
        let w = 1.0 / (n - 1) as f64;
        let c = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 0.0 } else { w }).collect())
            .collect();
        Self::new(vec![p_common; n], c)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn link(&self, x: usize, y: usize) -> f64 {
        self.c[x][y]
    }

    /// Reciprocity `c_xy c_yx` of the pair.
    pub fn reciprocity(&self, x: usize, y: usize) -> f64 {
        self.c[x][y] * self.c[y][x]
    }

    #[cfg(test)]
    pub(crate) fn p_mut(&mut self) -> &mut [f64] {
        &mut self.p
    }

    #[cfg(test)]
    pub(crate) fn c_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.c
    }

    /// All simplex and diagonal violations larger than [`VALIDATION_TOL`].
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(VALIDATION_TOL)
    }

    pub fn validate_with(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (x, &p) in self.p.iter().enumerate() {
            if !p.is_finite() {
                out.push(Violation { kind: ViolationKind::NonFinite, agent: x, amount: f64::INFINITY });
            } else if p < -tol || p > 1.0 + tol {
                let amount = if p < 0.0 { -p } else { p - 1.0 };
                out.push(Violation { kind: ViolationKind::StrategyRange, agent: x, amount });
            }
        }
        for (x, row) in self.c.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                out.push(Violation { kind: ViolationKind::NonFinite, agent: x, amount: f64::INFINITY });
                continue;
            }
            if row[x].abs() > tol {
                out.push(Violation { kind: ViolationKind::Diagonal, agent: x, amount: row[x].abs() });
            }
            let most_negative = row.iter().cloned().fold(0.0, f64::min);
            if most_negative < -tol {
                out.push(Violation { kind: ViolationKind::NegativeLink, agent: x, amount: -most_negative });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                out.push(Violation { kind: ViolationKind::RowSum, agent: x, amount: (sum - 1.0).abs() });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Strictly inside the simplex product: every `p` in `(0, 1)` and every
    /// off-diagonal link positive.
    pub fn is_interior(&self) -> bool {
        self.p.iter().all(|&p| p > 0.0 && p < 1.0)
            && self
                .c
                .iter()
                .enumerate()
                .all(|(x, row)| row.iter().enumerate().all(|(y, &v)| x == y || v > 0.0))
    }

    /// Pulls every coordinate at least `margin` away from the boundary and
    /// renormalizes link rows.
    pub fn clamp_interior(&self, margin: f64) -> Self {
        let p = self.p.iter().map(|&v| v.clamp(margin, 1.0 - margin)).collect();
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let mut r: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .map(|(y, &v)| if x == y { 0.0 } else { v.max(margin) })
                    .collect();
                let s: f64 = r.iter().sum();
                r.iter_mut().for_each(|v| *v /= s);
                r
            })
            .collect();
        Self { p, c }
    }

    /// Deterministic random interior state.
    ///
    /// Strategies are uniform on `[margin, 1 - margin]`; each link row is a
    /// uniform draw from the simplex mixed as `margin + (1 - (n-1) margin) w`,
    /// so every off-diagonal entry is at least `margin`.
    pub fn random_interior(n: usize, seed: u64, margin: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_interior_with(n, &mut rng, margin)
    }

    pub fn random_interior_with<R: Rng + ?Sized>(n: usize, rng: &mut R, margin: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 agents, got {n}")));
        }
        if !(margin > 0.0 && margin < 0.5 && margin < 1.0 / (n - 1) as f64) {
            return Err(Error::InvalidInput(format!(
                "margin {margin} must lie in (0, min(1/2, 1/(n-1)))"
            )));
        }
        let p = (0..n).map(|_| margin + (1.0 - 2.0 * margin) * rng.gen::<f64>()).collect();
        let spread = 1.0 - (n - 1) as f64 * margin;
        let c = (0..n)
            .map(|x| {
                let w: Vec<f64> = (0..n)
                    .map(|y| if x == y { 0.0 } else { -(1.0 - rng.gen::<f64>()).ln() })
                    .collect();
                let total: f64 = w.iter().sum();
                w.iter()
                    .enumerate()
                    .map(|(y, &v)| if x == y { 0.0 } else { margin + spread * v / total })
                    .collect()
            })
            .collect();
        Ok(Self { p, c })
    }

    /// Relabels agents: agent `x` of the result is agent `perm[x]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let p = (0..n).map(|x| self.p[perm[x]]).collect();
        let c = (0..n)
            .map(|x| (0..n).map(|y| self.c[perm[x]][perm[y]]).collect())
            .collect();
        Self { p, c }
    }

    /// `p` followed by the row-major off-diagonal entries of `c`.
    pub fn flat_values(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = self.p.clone();
        for x in 0..n {
            for y in partners(n, x) {
                out.push(self.c[x][y]);
            }
        }
        out
    }

    /// Column names matching [`CoevolState::flat_values`].
    pub fn column_names(n: usize) -> Vec<String> {
        let mut names: Vec<String> = (0..n).map(|x| format!("p_{x}")).collect();
        for x in 0..n {
            for y in partners(n, x) {
                names.push(format!("c_{x}_{y}"));
            }
        }
        names
    }

    /// Max-norm distance over strategies and links.
    pub fn distance(&self, other: &Self) -> f64 {
        let dp = self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs());
        let dc = self
            .c
            .iter()
            .flatten()
            .zip(other.c.iter().flatten())
            .map(|(a, b)| (a - b).abs());
        dp.chain(dc).fold(0.0, f64::max)
    }

    /// Independent coordinates: for each row the first `n-2` partners, then
    /// the `n` strategies. The last partner of each row is implied.
    pub fn free_coordinates(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1));
        for x in 0..n {
            for y in partners(n, x).take(n - 2) {
                out.push(self.c[x][y]);
            }
        }
        out.extend_from_slice(&self.p);
        out
    }

    /// Inverse of [`CoevolState::free_coordinates`]; no range checks, so it
    /// also serves finite differences that step slightly outside the simplex.
    pub fn from_free_coordinates(n: usize, z: &[f64]) -> Result<Self> {
        if n < 2 || z.len() != n * (n - 1) {
            return Err(Error::InvalidInput(format!(
                "expected {} independent coordinates for n = {n}, got {}",
                n * n.saturating_sub(1),
                z.len()
            )));
        }
        let links = n * (n - 2);
        let mut c = vec![vec![0.0; n]; n];
        for x in 0..n {
            let free = &z[x * (n - 2)..(x + 1) * (n - 2)];
            let mut rest = 1.0;
            for (y, &v) in partners(n, x).zip(free) {
                c[x][y] = v;
                rest -= v;
            }
            c[x][last_partner(n, x)] = rest;
        }
        Ok(Self { p: z[links..].to_vec(), c })
    }
}

/// Partners of `x` in increasing order.
pub fn partners(n: usize, x: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&y| y != x)
}

/// Reference partner whose link weight is implied by the row constraint.
pub fn last_partner(n: usize, x: usize) -> usize {
    if x == n - 1 {
        n - 2
    } else {
        n - 1
    }
}

/// Unconstrained chart of the open interior.
///
/// Layout mirrors [`CoevolState::free_coordinates`]: `n(n-2)` link log-ratios
/// `ln(c_xy / c_x,last)` row by row, then `n` strategy logits
/// `ln(p / (1-p))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitCoords {
    n: usize,
    values: Vec<f64>,
}

impl LogitCoords {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || values.len() != n * (n - 1) {
            return Err(Error::InvalidInput(format!(
                "expected {} chart coordinates for n = {n}, got {}",
                n * n.saturating_sub(1),
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn link_block(&self) -> &[f64] {
        &self.values[..self.n * (self.n - 2)]
    }

    pub fn strategy_logits(&self) -> &[f64] {
        &self.values[self.n * (self.n - 2)..]
    }

    /// Row `x` of the link matrix, `softmax([u_x, 0])` spread over partners.
    pub fn link_row(&self, x: usize) -> Vec<f64> {
        let n = self.n;
        let free = &self.values[x * (n - 2)..(x + 1) * (n - 2)];
        let max = free.iter().cloned().fold(0.0, f64::max);
        let mut row = vec![0.0; n];
        let mut total = (-max).exp();
        for (y, &u) in partners(n, x).zip(free) {
            let e = (u - max).exp();
            row[y] = e;
            total += e;
        }
        row[last_partner(n, x)] = (-max).exp();
        row.iter_mut().for_each(|v| *v /= total);
        row
    }

    /// `(p, 1 - p)` of agent `x`, both computed without cancellation.
    pub fn strategy_pair(&self, x: usize) -> (f64, f64) {
        let u = self.strategy_logits()[x];
        (sigmoid(u), sigmoid(-u))
    }
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn to_logits(s: &CoevolState) -> Result<LogitCoords> {
    if !s.is_interior() {
        return Err(Error::ChartDomain(
            "logit chart needs every strategy in (0,1) and every link positive".into(),
        ));
    }
    let n = s.n();
    let mut values = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        let reference = s.c[x][last_partner(n, x)].ln();
        for y in partners(n, x).take(n - 2) {
            values.push(s.c[x][y].ln() - reference);
        }
    }
    values.extend(s.p.iter().map(|&p| logit(p)));
    LogitCoords::new(n, values)
}

pub fn from_logits(u: &LogitCoords) -> CoevolState {
    let n = u.n;
    let p = (0..n).map(|x| u.strategy_pair(x).0).collect();
    let c = (0..n).map(|x| u.link_row(x)).collect();
    CoevolState { p, c }
}

/// Joint (partner, action) distribution of every agent.
///
/// `q[x][y][i]` is the probability that `x` plays with `y` using action `i`
/// (index 0 is action 1). The diagonal is zero and each agent's entries sum
/// to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy {
    q: Vec<Vec<[f64; 2]>>,
}

impl JointStrategy {
    pub fn new(q: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let n = q.len();
        if n < 2 || q.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("joint strategy must be n x n x 2 with n >= 2".into()));
        }
        Ok(Self { q })
    }

    /// Factorized joint strategy `q_xy^i = c_xy p_x^i`.
    pub fn from_state(s: &CoevolState) -> Self {
        let n = s.n();
        let q = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        let c = if x == y { 0.0 } else { s.c[x][y] };
                        [c * s.p[x], c * (1.0 - s.p[x])]
                    })
                    .collect()
            })
            .collect();
        Self { q }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.q[x][y]
    }

    pub fn rows(&self) -> &[Vec<[f64; 2]>] {
        &self.q
    }

    /// Largest deviation from the simplex constraints.
    pub fn normalization_error(&self) -> f64 {
        self.q
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let sum: f64 = row.iter().flatten().sum();
                let diag = row[x][0].abs() + row[x][1].abs();
                let neg = row.iter().flatten().cloned().fold(0.0, f64::min).abs();
                (sum - 1.0).abs().max(diag).max(neg)
            })
            .fold(0.0, f64::max)
    }

    /// Marginals `c_xy = sum_i q_xy^i` and `p_x = sum_y q_xy^1`.
    pub fn marginals(&self) -> CoevolState {
        let n = self.n();
        let c: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 0.0 } else { self.q[x][y][0] + self.q[x][y][1] }).collect())
            .collect();
        let p = (0..n)
            .map(|x| (0..n).filter(|&y| y != x).map(|y| self.q[x][y][0]).sum())
            .collect();
        CoevolState { p, c }
    }
}
