use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::jacobian::{jacobian_logit, jacobian_numeric, max_abs, RestPoint};
use super::{max_real, sort_spectrum};
use crate::dynamics::FlowParams;
use crate::error::{Error, Result};
use crate::game::ReducedGame;
use crate::state::{partners, to_logits, CoevolState};

/// Real-part tolerance separating stable, marginal and unstable spectra.
pub const STABILITY_TOL: f64 = 1e-8;

/// Reciprocity product (or spoke weight) that counts as a full link.
pub const CONNECTED: f64 = 0.99;
/// Reciprocity product below which a link counts as absent.
pub const ABSENT: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    MarginallyStable,
    Unstable,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::MarginallyStable => "marginally-stable",
            Classification::Unstable => "unstable",
        })
    }
}

/// Whole-network topologies of the three-player equilibria, extended to
/// `n` agents where the description carries over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Configuration {
    /// Two agents linked only to each other, everybody else unreciprocated.
    PairPlusIsolated,
    /// One center that every other agent links to fully.
    Star,
    /// Every link weighs `1/(n-1)`.
    SymmetricUniform,
    /// No reciprocated link, every agent committed to a single partner.
    CyclicNonReciprocated,
    Other,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Configuration::PairPlusIsolated => "pair-plus-isolated",
            Configuration::Star => "star",
            Configuration::SymmetricUniform => "symmetric-uniform",
            Configuration::CyclicNonReciprocated => "cyclic-non-reciprocated",
            Configuration::Other => "other",
        })
    }
}

pub fn classify_spectrum(eigenvalues: &[Complex<f64>], tol: f64) -> Classification {
    let top = max_real(eigenvalues);
    if top < -tol {
        Classification::Stable
    } else if top <= tol {
        Classification::MarginallyStable
    } else {
        Classification::Unstable
    }
}

/// Names the topology of `s`.
///
/// A star is recognized by spoke weights `c_spoke,center >= 0.99` rather than
/// by reciprocity products: the center may split its weight arbitrarily, so
/// its products can be far below 0.99.
pub fn match_configuration(s: &CoevolState) -> Configuration {
    let n = s.n();
    if n < 3 {
        return if s.reciprocity(0, 1) >= CONNECTED {
            Configuration::PairPlusIsolated
        } else {
            Configuration::Other
        };
    }
    let uniform = 1.0 / (n - 1) as f64;
    let all_pairs = || (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)));

    if (0..n).all(|x| partners(n, x).all(|y| (s.link(x, y) - uniform).abs() < 1e-3)) {
        return Configuration::SymmetricUniform;
    }
    for center in 0..n {
        let spokes_committed = partners(n, center).all(|y| s.link(y, center) >= CONNECTED);
        let spokes_apart = all_pairs()
            .filter(|&(x, y)| x != center && y != center)
            .all(|(x, y)| s.reciprocity(x, y) < ABSENT);
        let served = partners(n, center).filter(|&y| s.reciprocity(center, y) >= ABSENT).count();
        if spokes_committed && spokes_apart && served >= 2 {
            return Configuration::Star;
        }
    }
    let strong: Vec<_> = all_pairs().filter(|&(x, y)| s.reciprocity(x, y) >= CONNECTED).collect();
    let weak = all_pairs().filter(|&(x, y)| s.reciprocity(x, y) < ABSENT).count();
    let total = n * (n - 1) / 2;
    if strong.len() == 1 && weak == total - 1 {
        return Configuration::PairPlusIsolated;
    }
    let committed = (0..n).all(|x| partners(n, x).any(|y| s.link(x, y) >= CONNECTED));
    if weak == total && committed {
        return Configuration::CyclicNonReciprocated;
    }
    Configuration::Other
}

/// Spectrum, verdict and topology of a rest point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `[re, im]` pairs sorted by descending real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub classification: Classification,
    pub matched_configuration: Configuration,
    pub max_real: f64,
    /// Largest entry of the strategy-from-links block, reported at `T = 0`
    /// where the spectrum factorizes over the two diagonal blocks.
    pub j21_max: Option<f64>,
}

impl StabilityReport {
    pub fn complex_eigenvalues(&self) -> Vec<Complex<f64>> {
        self.eigenvalues.iter().map(|&[re, im]| Complex::new(re, im)).collect()
    }
}

/// Classifies a rest point from the spectrum of its Jacobian.
///
/// At `T > 0` the Jacobian is taken in the logit chart, which is similar to
/// the raw independent-coordinate Jacobian at a rest point and remains
/// accurate when the point sits exponentially close to the boundary. At
/// `T = 0` the raw Jacobian is used directly.
pub fn classify_stability(rp: &RestPoint, fp: &FlowParams) -> Result<StabilityReport> {
    let rp = rp.under(fp)?;
    let (jac, j21_max) = if fp.temperature > 0.0 {
        let u = match rp.logits() {
            Some(u) => u.clone(),
            None => to_logits(&rp.state)?,
        };
        (jacobian_logit(&u, fp)?, None)
    } else {
        let j = jacobian_numeric(&rp, fp)?;
        let j21 = max_abs(&j.j21());
        (j, Some(j21))
    };
    let mut eigenvalues = jac.eigenvalues()?;
    sort_spectrum(&mut eigenvalues);
    Ok(StabilityReport {
        classification: classify_spectrum(&eigenvalues, STABILITY_TOL),
        matched_configuration: match_configuration(&rp.state),
        max_real: max_real(&eigenvalues),
        eigenvalues: eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        j21_max,
    })
}

/// Finds the reciprocated pair of a three-player pair-plus-isolated state.
fn pair_of(s: &CoevolState, tol: f64) -> Option<(usize, usize, usize)> {
    [(0, 1, 2), (0, 2, 1), (1, 2, 0)]
        .into_iter()
        .find(|&(x, y, _)| (s.link(x, y) - 1.0).abs() <= tol && (s.link(y, x) - 1.0).abs() <= tol)
}

/// Closed-form spectrum of a three-player rest point in which `x` and `y`
/// play only with each other and `z` is isolated:
///
/// ```text
/// l1 = r_xz - r_xy          l4 = (1 - 2 p_x)(r_x^1 - r_x^2)
/// l2 = r_yz - r_yx          l5 = (1 - 2 p_y)(r_y^1 - r_y^2)
/// l3 = 0                    l6 = 0
/// ```
/// `r_x^1 - r_x^2` is the advantage of action 1 for `x` against its partner
/// profile, `sum_y c_xy c_yx (a p_y + b)`.
pub fn config1_eigenvalues(rp: &RestPoint, fp: &FlowParams) -> Result<[f64; 6]> {
    let s = &rp.state;
    if s.n() != 3 {
        return Err(Error::ConfigurationMismatch(format!("expected 3 agents, got {}", s.n())));
    }
    let (x, y, z) = pair_of(s, 1e-8)
        .ok_or_else(|| Error::ConfigurationMismatch("no pair with c_xy = c_yx = 1".into()))?;
    let p = s.p();
    let r = |i: usize, j: usize| fp.link_reward(p[i], p[j], s.link(j, i));
    let advantage = |i: usize| -> f64 {
        partners(3, i)
            .map(|j| s.reciprocity(i, j) * fp.game.action_advantage(p[j]))
            .sum()
    };
    Ok([
        r(x, z) - r(x, y),
        r(y, z) - r(y, x),
        0.0,
        (1.0 - 2.0 * p[x]) * advantage(x),
        (1.0 - 2.0 * p[y]) * advantage(y),
        0.0,
    ])
}

/// Closed-form Jacobian structure of a star at zero temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarSpectrum {
    /// Strategy-block diagonal by agent; agent 0 is the center. The block is
    /// diagonal, so these are its eigenvalues.
    pub j22_diagonal: Vec<f64>,
    /// Link-block diagonal in independent-coordinate order.
    pub j11_diagonal: Vec<f64>,
    /// Link-block eigenvalues: the center's rows contribute zeros, each spoke
    /// row `n - 2` copies of `-pi c_0y` with `pi` the pair payoff.
    pub j11_eigenvalues: Vec<f64>,
    pub zero_count: usize,
}

impl StarSpectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.j11_eigenvalues.iter().chain(&self.j22_diagonal).copied().collect()
    }
}

/// Star state with center 0, every spoke linked fully to the center, the
/// center splitting its weight as `center_weights` over agents `1..n`, and
/// every agent playing `p_common`.
pub fn star_state(n: usize, p_common: f64, center_weights: &[f64]) -> Result<CoevolState> {
    if n < 3 || center_weights.len() != n - 1 {
        return Err(Error::InvalidInput(format!(
            "star on {n} agents needs n >= 3 and {} center weights",
            n.saturating_sub(1)
        )));
    }
    let mut c = vec![vec![0.0; n]; n];
    c[0][1..].copy_from_slice(center_weights);
    for row in c.iter_mut().skip(1) {
        row[0] = 1.0;
    }
    let s = CoevolState::new(vec![p_common; n], c)?;
    if !s.is_valid() {
        return Err(Error::InvalidInput("center weights must be a probability vector".into()));
    }
    Ok(s)
}

pub fn star_stability_analytic(
    n: usize,
    g: &ReducedGame,
    a22: f64,
    p_common: f64,
    center_weights: &[f64],
) -> Result<StarSpectrum> {
    if p_common != 0.0 && p_common != 1.0 {
        return Err(Error::InvalidInput(format!("common strategy {p_common} must be 0 or 1")));
    }
    let s = star_state(n, p_common, center_weights)?;
    let p = p_common;
    let drive = (1.0 - 2.0 * p) * g.action_advantage(p);
    let j22_diagonal = (0..n)
        .map(|x| partners(n, x).map(|y| s.reciprocity(x, y)).sum::<f64>() * drive)
        .collect();
    let pair = g.pair_payoff(p, p, a22);
    let mut j11_diagonal = Vec::with_capacity(n * (n - 2));
    let mut j11_eigenvalues = Vec::with_capacity(n * (n - 2));
    for x in 0..n {
        let value = if x == 0 { 0.0 } else { -pair * s.link(0, x) };
        for _ in 0..n - 2 {
            j11_diagonal.push(value);
            j11_eigenvalues.push(value);
        }
    }
    let mut spectrum = StarSpectrum { j22_diagonal, j11_diagonal, j11_eigenvalues, zero_count: 0 };
    spectrum.zero_count = spectrum.eigenvalues().iter().filter(|v| **v == 0.0).count();
    Ok(spectrum)
}
