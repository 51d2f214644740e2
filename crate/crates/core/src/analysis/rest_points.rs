use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jacobian::RestPoint;
use super::symmetric::symmetric_fixed_point;
use crate::dynamics::{field_unchecked, logit_field_slice, FlowParams};
use crate::error::Result;
use crate::seed::item_rng;
use crate::state::{partners, to_logits, CoevolState, LogitCoords};

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 50;
/// Chart residual at which Newton stops; the raw residual is then far below
/// the rest-point tolerance.
const CHART_TOL: f64 = 1e-11;
const RAW_TOL: f64 = 1e-12;
/// Beyond this the chart point has left every representable state.
const CHART_LIMIT: f64 = 700.0;
/// Rest points closer than this in max-norm are merged.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Interior margin for random starts.
const START_MARGIN: f64 = 1e-3;

/// Converged rest points plus the number of starts that failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestPointSearch {
    pub points: Vec<RestPoint>,
    pub dropped: usize,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn fd_jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, z: &[f64], h0: f64) -> DMatrix<f64> {
    let dim = z.len();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let h = h0 * z[i].abs().max(1.0);
        let mut plus = z.to_vec();
        let mut minus = z.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        for r in 0..dim {
            m[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    m
}

/// Damped Newton with a pseudo-inverse step, halving the step until the
/// residual decreases. `project` maps trial points back onto the domain.
fn newton<F, P>(f: F, project: P, z0: Vec<f64>, tol: f64, h: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    P: Fn(Vec<f64>) -> Option<Vec<f64>>,
{
    let mut z = project(z0)?;
    let mut fz = f(&z);
    for _ in 0..=MAX_ITER {
        if fz.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if max_norm(&fz) < tol {
            return Some(z);
        }
        let jac = fd_jacobian(&f, &z, h);
        let rhs = DVector::from_vec(fz.iter().map(|v| -v).collect());
        let svd = jac.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let step = svd.solve(&rhs, cutoff).ok()?;
        let current = norm2(&fz);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Some(trial) = project(trial) {
                let ft = f(&trial);
                if ft.iter().all(|v| v.is_finite()) && norm2(&ft) < (1.0 - 1e-4 * lambda) * current {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (next, fnext) = accepted?;
        z = next;
        fz = fnext;
    }
    None
}

/// Clips free coordinates back onto the closed simplex product.
fn project_box(n: usize, mut z: Vec<f64>) -> Option<Vec<f64>> {
    if z.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let links = n * (n - 2);
    for x in 0..n {
        let row = &mut z[x * (n - 2)..(x + 1) * (n - 2)];
        row.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let total: f64 = row.iter().sum();
        if total > 1.0 {
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    z[links..].iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Some(z)
}

fn solve_from(start: &CoevolState, fp: &FlowParams) -> Option<RestPoint> {
    let n = start.n();
    if fp.temperature > 0.0 {
        let u0 = to_logits(&start.clamp_interior(1e-9)).ok()?.into_values();
        let f = |u: &[f64]| logit_field_slice(n, u, fp);
        let bounded = |u: Vec<f64>| u.iter().all(|v| v.abs() < CHART_LIMIT).then_some(u);
        let u = newton(f, bounded, u0, CHART_TOL, 1e-6)?;
        RestPoint::from_logits(LogitCoords::new(n, u).ok()?, fp).ok()
    } else {
        let f = |z: &[f64]| {
            let s = CoevolState::from_free_coordinates(n, z).expect("length fixed");
            field_unchecked(&s, fp).free_components()
        };
        let z = newton(f, |z| project_box(n, z), start.free_coordinates(), RAW_TOL, 1e-6)?;
        let s = CoevolState::from_free_coordinates(n, &z).ok()?;
        if !s.is_valid() {
            return None;
        }
        RestPoint::new(s, fp).ok()
    }
}

/// Network topologies used as structured Newton seeds for three agents:
/// the three pairs with an isolated third agent, the three centered stars,
/// the uniform network and both directed cycles.
fn three_player_topologies() -> Vec<[[f64; 3]; 3]> {
    let mut out = Vec::new();
    for (x, y, z) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        let mut c = [[0.0; 3]; 3];
        c[x][y] = 1.0;
        c[y][x] = 1.0;
        c[z][x] = 0.5;
        c[z][y] = 0.5;
        out.push(c);
    }
    for center in 0..3 {
        let mut c = [[0.0; 3]; 3];
        for y in partners(3, center) {
            c[center][y] = 0.5;
            c[y][center] = 1.0;
        }
        out.push(c);
    }
    out.push([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]);
    out.push([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    out.push([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    out
}

/// Deterministic starting states that sit on (or next to) the known
/// equilibrium families.
pub fn structured_seeds(n: usize, fp: &FlowParams) -> Vec<CoevolState> {
    let mut seeds = Vec::new();
    if n == 3 {
        for topology in three_player_topologies() {
            for mask in 0..8u32 {
                let p = (0..3).map(|i| f64::from((mask >> i) & 1)).collect();
                let c = topology.iter().map(|r| r.to_vec()).collect();
                seeds.push(CoevolState::new(p, c).expect("seed shape"));
            }
        }
    } else if n > 3 {
        let weight = 1.0 / (n - 1) as f64;
        for center in 0..n {
            for p in [0.0, 1.0] {
                let mut c = vec![vec![0.0; n]; n];
                for y in partners(n, center) {
                    c[center][y] = weight;
                    c[y][center] = 1.0;
                }
                seeds.push(CoevolState::new(vec![p; n], c).expect("seed shape"));
            }
        }
    }
    let mut commons = symmetric_fixed_point(&fp.game, n, fp.temperature);
    commons.extend(fp.game.mixed_ne());
    commons.extend([0.0, 1.0]);
    for p in commons {
        seeds.push(CoevolState::symmetric(n, p).expect("probability"));
    }
    seeds
}

/// Multi-start search for rest points.
///
/// Damped Newton runs from every structured seed and from `starts` random
/// interior states drawn with seeds derived from `seed`. At `T > 0` it works
/// in the logit chart, at `T = 0` in raw independent coordinates clipped to
/// the simplex. Points are merged at max-norm distance `1e-6`, in start
/// order, so the output does not depend on the worker count.
pub fn find_rest_points(fp: &FlowParams, n: usize, starts: usize, seed: u64) -> Result<RestPointSearch> {
    if n < 2 {
        return Err(crate::Error::InvalidInput(format!("need at least 2 agents, got {n}")));
    }
    let mut initial = structured_seeds(n, fp);
    for k in 0..starts {
        let mut rng = item_rng(seed, "rest-points", k as u64);
        initial.push(CoevolState::random_interior_with(n, &mut rng, START_MARGIN)?);
    }
    let solved: Vec<Option<RestPoint>> = initial.par_iter().map(|s| solve_from(s, fp)).collect();
    let mut points: Vec<RestPoint> = Vec::new();
    let mut dropped = 0;
    for rp in solved {
        match rp {
            Some(rp) => {
                if !points.iter().any(|q| q.state.distance(&rp.state) < DEDUP_RADIUS) {
                    points.push(rp);
                }
            }
            None => dropped += 1,
        }
    }
    Ok(RestPointSearch { points, dropped })
}
