use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_spectrum, classify_stability, find_rest_points, jacobian_analytic_sym3, max_real,
    symmetric_fixed_point, symmetric_roots_logit, Classification, Configuration, RestPoint, STABILITY_TOL,
};
use crate::dynamics::FlowParams;
use crate::error::{Error, Result};
use crate::game::PayoffSpec;
use crate::seed::derive_seed;
use crate::state::{sigmoid, CoevolState, LogitCoords};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("grid `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!("grid `{name}` must be finite and strictly increasing")));
        }
        Ok(Self { name: name.to_string(), values })
    }

    /// `steps` evenly spaced values from `min` to `max` inclusive.
    pub fn linspace(name: &str, min: f64, max: f64, steps: usize) -> Result<Self> {
        let values = match steps {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..steps)
                .map(|k| if k + 1 == steps { max } else { min + (max - min) * k as f64 / (steps - 1) as f64 })
                .collect(),
        };
        Self::new(name, values)
    }
}

/// A rest point found at one grid point, with its verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub id: usize,
    pub state: CoevolState,
    pub residual: f64,
    pub classification: Classification,
    pub configuration: Configuration,
    pub max_real: f64,
}

/// Verdict for one symmetric root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricRoot {
    pub p: f64,
    pub classification: Classification,
    pub max_real: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub temperature: f64,
    pub c_iso: f64,
    pub rest_points: Vec<SweepEntry>,
    pub symmetric_roots: Vec<SymmetricRoot>,
    /// Stable only if every symmetric root is stable.
    pub symmetric_verdict: Classification,
    /// Symmetric roots that attract along the common-strategy direction:
    /// the branches of the strategy bifurcation diagram.
    pub stable_branches: Vec<f64>,
    pub dropped_starts: usize,
}

/// Stable cells of the symmetric configuration in the `(T, C_I)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRegion {
    /// `mask[i][j]` for temperature `i` and isolation payoff `j`.
    pub mask: Vec<Vec<bool>>,
    /// Component label per cell (`None` for unstable cells); components are
    /// four-neighbour connected and numbered in scan order.
    pub labels: Vec<Vec<Option<usize>>>,
    pub components: usize,
    /// Component reaching the highest temperature.
    pub primary: Option<usize>,
    /// Per temperature row, the `C_I` extent `[min, max]` of the primary
    /// component; the two edges traced over `T` form the boundary polyline.
    pub boundary: Vec<BoundaryRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub temperature: f64,
    pub c_iso_min: f64,
    pub c_iso_max: f64,
}

impl StabilityRegion {
    /// `C_I` width of the primary component at the row closest to `t`.
    pub fn extent_at(&self, t: f64) -> f64 {
        self.boundary
            .iter()
            .min_by(|a, b| (a.temperature - t).abs().total_cmp(&(b.temperature - t).abs()))
            .filter(|row| (row.temperature - t).abs() < 1e-9)
            .map_or(0.0, |row| row.c_iso_max - row.c_iso_min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub points: Vec<SweepPoint>,
    /// Midpoint of the first grid interval where the symmetric configuration
    /// turns from unstable to stable.
    pub critical_temperature: Option<f64>,
    pub region: Option<StabilityRegion>,
}

/// Common strategies of the symmetric roots, paired with their logits when
/// `T > 0` (low-temperature roots round to exactly 0 or 1 in `p`).
fn symmetric_root_coordinates(n: usize, fp: &FlowParams) -> Vec<(f64, Option<f64>)> {
    if fp.temperature > 0.0 {
        symmetric_roots_logit(&fp.game, n, fp.temperature).into_iter().map(|u| (sigmoid(u), Some(u))).collect()
    } else {
        symmetric_fixed_point(&fp.game, n, 0.0).into_iter().map(|p| (p, None)).collect()
    }
}

/// Uniform network at common strategy `p` (logit `u` when exploring).
fn symmetric_rest_point(n: usize, p: f64, u: Option<f64>, fp: &FlowParams) -> Result<RestPoint> {
    match u {
        Some(u) => {
            let mut values = vec![0.0; n * (n - 2)];
            values.extend(std::iter::repeat_n(u, n));
            RestPoint::from_logits(LogitCoords::new(n, values)?, fp)
        }
        None => RestPoint::new(CoevolState::symmetric(n, p)?, fp),
    }
}

/// Spectrum-based verdict for a symmetric root; closed form for three agents.
fn symmetric_root(n: usize, p: f64, u: Option<f64>, game: &PayoffSpec, fp: &FlowParams) -> Result<SymmetricRoot> {
    if n == 3 && (u.is_some() || (p > 0.0 && p < 1.0)) {
        let eig = jacobian_analytic_sym3(p, &fp.game, game.b22, game.c_iso, fp.temperature)?;
        Ok(SymmetricRoot { p, classification: classify_spectrum(&eig, STABILITY_TOL), max_real: max_real(&eig) })
    } else {
        let report = classify_stability(&symmetric_rest_point(n, p, u, fp)?, fp)?;
        Ok(SymmetricRoot { p, classification: report.classification, max_real: report.max_real })
    }
}

fn symmetric_roots(n: usize, game: &PayoffSpec, fp: &FlowParams) -> Result<Vec<SymmetricRoot>> {
    symmetric_root_coordinates(n, fp).into_iter().map(|(p, u)| symmetric_root(n, p, u, game, fp)).collect()
}

/// Roots that attract along the common-strategy direction.
fn reduced_stable(n: usize, fp: &FlowParams, roots: &[f64]) -> Vec<f64> {
    let g = fp.game;
    let k = (n - 1) as f64;
    let t = fp.temperature;
    roots
        .iter()
        .copied()
        .filter(|&p| {
            if t > 0.0 {
                // d/du of (a sigma(u) + b)/(n-1) - T u
                g.a * p * (1.0 - p) / k - t < 0.0
            } else if p == 0.0 {
                g.b < 0.0
            } else if p == 1.0 {
                g.a + g.b > 0.0
            } else {
                g.a < 0.0
            }
        })
        .collect()
}

fn verdict(roots: &[SymmetricRoot]) -> Classification {
    if roots.iter().all(|r| r.classification == Classification::Stable) {
        Classification::Stable
    } else if roots.iter().any(|r| r.classification == Classification::Unstable) {
        Classification::Unstable
    } else {
        Classification::MarginallyStable
    }
}

fn estimate_transition(points: &[SweepPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        (w[0].symmetric_verdict != Classification::Stable && w[1].symmetric_verdict == Classification::Stable)
            .then(|| 0.5 * (w[0].temperature + w[1].temperature))
    })
}

/// Rest points and symmetric-network stability along a temperature grid.
pub fn sweep_temperature(
    game: &PayoffSpec,
    n: usize,
    t_grid: &[f64],
    starts: usize,
    seed: u64,
) -> Result<SweepResult> {
    let axis = Axis::new("temperature", t_grid.to_vec())?;
    if t_grid[0] < 0.0 {
        return Err(Error::InvalidInput("temperatures must be non-negative".into()));
    }
    let base = FlowParams::from_payoff(game, 0.0)?;
    let points = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| -> Result<SweepPoint> {
            let fp = base.with_temperature(t)?;
            let search = find_rest_points(&fp, n, starts, derive_seed(seed, "sweep-temperature", i as u64))?;
            let mut rest_points = Vec::with_capacity(search.points.len());
            for (id, rp) in search.points.iter().enumerate() {
                let report = classify_stability(rp, &fp)?;
                rest_points.push(SweepEntry {
                    id,
                    state: rp.state.clone(),
                    residual: rp.residual,
                    classification: report.classification,
                    configuration: report.matched_configuration,
                    max_real: report.max_real,
                });
            }
            let symmetric_roots = symmetric_roots(n, game, &fp)?;
            let ps: Vec<f64> = symmetric_roots.iter().map(|r| r.p).collect();
            Ok(SweepPoint {
                temperature: t,
                c_iso: game.c_iso,
                rest_points,
                symmetric_verdict: verdict(&symmetric_roots),
                stable_branches: reduced_stable(n, &fp, &ps),
                symmetric_roots,
                dropped_starts: search.dropped,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        critical_temperature: estimate_transition(&points),
        axes: vec![axis],
        points,
        region: None,
    })
}

/// Four-neighbour connected components of `mask` in scan order.
fn label_components(mask: &[Vec<bool>]) -> (Vec<Vec<Option<usize>>>, usize) {
    let rows = mask.len();
    let cols = mask.first().map_or(0, Vec::len);
    let mut labels = vec![vec![None; cols]; rows];
    let mut next = 0;
    for i in 0..rows {
        for j in 0..cols {
            if !mask[i][j] || labels[i][j].is_some() {
                continue;
            }
            labels[i][j] = Some(next);
            let mut stack = vec![(i, j)];
            while let Some((r, c)) = stack.pop() {
                let mut visit = |r2: usize, c2: usize| {
                    if mask[r2][c2] && labels[r2][c2].is_none() {
                        labels[r2][c2] = Some(next);
                        stack.push((r2, c2));
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < rows {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < cols {
                    visit(r, c + 1);
                }
            }
            next += 1;
        }
    }
    (labels, next)
}

fn build_region(mask: Vec<Vec<bool>>, t_grid: &[f64], ci_grid: &[f64]) -> StabilityRegion {
    let (labels, components) = label_components(&mask);
    // the component present in the highest row; ties go to the widest
    let primary = labels.iter().rev().find_map(|row| {
        let mut best: Option<(usize, usize)> = None;
        for label in row.iter().flatten() {
            let width = row.iter().filter(|l| **l == Some(*label)).count();
            if best.is_none_or(|(_, w)| width > w) {
                best = Some((*label, width));
            }
        }
        best.map(|(l, _)| l)
    });
    let boundary = match primary {
        Some(id) => labels
            .iter()
            .zip(t_grid)
            .filter_map(|(row, &t)| {
                let cols: Vec<usize> = (0..row.len()).filter(|&j| row[j] == Some(id)).collect();
                Some(BoundaryRow {
                    temperature: t,
                    c_iso_min: ci_grid[*cols.first()?],
                    c_iso_max: ci_grid[*cols.last()?],
                })
            })
            .collect(),
        None => Vec::new(),
    };
    StabilityRegion { mask, labels, components, primary, boundary }
}

/// Stability of the symmetric network over the `(T, C_I)` plane.
///
/// A cell is stable when at least one symmetric root is stable; for three
/// agents interior roots are classified from the closed-form spectrum.
pub fn sweep_plane(base: &PayoffSpec, n: usize, t_grid: &[f64], ci_grid: &[f64]) -> Result<SweepResult> {
    let t_axis = Axis::new("temperature", t_grid.to_vec())?;
    let ci_axis = Axis::new("c_iso", ci_grid.to_vec())?;
    if t_grid[0] < 0.0 {
        return Err(Error::InvalidInput("temperatures must be non-negative".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 agents, got {n}")));
    }
    let cells: Vec<(usize, usize)> =
        (0..t_grid.len()).flat_map(|i| (0..ci_grid.len()).map(move |j| (i, j))).collect();
    let points = cells
        .par_iter()
        .map(|&(i, j)| -> Result<SweepPoint> {
            let game = base.with_isolation(ci_grid[j]);
            let fp = FlowParams::from_payoff(&game, t_grid[i])?;
            let symmetric_roots = symmetric_roots(n, &game, &fp)?;
            let ps: Vec<f64> = symmetric_roots.iter().map(|r| r.p).collect();
            Ok(SweepPoint {
                temperature: t_grid[i],
                c_iso: ci_grid[j],
                rest_points: Vec::new(),
                symmetric_verdict: verdict(&symmetric_roots),
                stable_branches: reduced_stable(n, &fp, &ps),
                symmetric_roots,
                dropped_starts: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mask = vec![vec![false; ci_grid.len()]; t_grid.len()];
    for (&(i, j), point) in cells.iter().zip(&points) {
        mask[i][j] = point.symmetric_roots.iter().any(|r| r.classification == Classification::Stable);
    }
    Ok(SweepResult {
        axes: vec![t_axis, ci_axis],
        critical_temperature: None,
        region: Some(build_region(mask, t_grid, ci_grid)),
        points,
    })
}
