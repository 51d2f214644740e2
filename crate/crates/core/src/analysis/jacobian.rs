use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::dynamics::{field_unchecked, logit_field_slice, raw_field_from_logits, FlowParams};
use crate::error::{Error, Result};
use crate::state::{from_logits, last_partner, partners, to_logits, CoevolState, LogitCoords};

/// Largest flow residual accepted for a rest point.
pub const REST_TOL: f64 = 1e-9;

/// A state where the flow vanishes, together with the parameters it was
/// found under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestPoint {
    pub state: CoevolState,
    /// Max-norm of the raw field at `state`.
    pub residual: f64,
    pub params: FlowParams,
    /// Chart coordinates, kept when the point was located in the chart so that
    /// near-boundary points are not degraded by a round trip through `(p, c)`.
    #[serde(skip)]
    pub(crate) logits: Option<LogitCoords>,
}

impl RestPoint {
    /// Checks the residual of `state` under `fp`.
    pub fn new(state: CoevolState, fp: &FlowParams) -> Result<Self> {
        let logits = if fp.temperature > 0.0 { Some(to_logits(&state)?) } else { None };
        let residual = match &logits {
            Some(u) => raw_field_from_logits(u, fp).max_norm(),
            None => field_unchecked(&state, fp).max_norm(),
        };
        Self::checked(state, residual, *fp, logits)
    }

    pub fn from_logits(u: LogitCoords, fp: &FlowParams) -> Result<Self> {
        let residual = raw_field_from_logits(&u, fp).max_norm();
        Self::checked(from_logits(&u), residual, *fp, Some(u))
    }

    fn checked(state: CoevolState, residual: f64, params: FlowParams, logits: Option<LogitCoords>) -> Result<Self> {
        if !(residual < REST_TOL) {
            return Err(Error::NotRestPoint { residual, tolerance: REST_TOL });
        }
        Ok(Self { state, residual, params, logits })
    }

    pub fn logits(&self) -> Option<&LogitCoords> {
        self.logits.as_ref()
    }

    /// Same point re-validated under other parameters.
    pub(crate) fn under(&self, fp: &FlowParams) -> Result<Self> {
        if *fp == self.params {
            return Ok(self.clone());
        }
        match &self.logits {
            Some(u) if fp.temperature > 0.0 => Self::from_logits(u.clone(), fp),
            _ => Self::new(self.state.clone(), fp),
        }
    }
}

/// Jacobian in independent coordinates, links first, then strategies.
///
/// With `L = n(n-2)` link coordinates, `J11` is the `L x L` link block, `J22`
/// the `n x n` strategy block, `J12` the response of links to strategies and
/// `J21` the response of strategies to links.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockJacobian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl BlockJacobian {
    pub fn new(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dim = n * n.saturating_sub(1);
        if n < 2 || matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidInput(format!("Jacobian for n = {n} must be {dim} x {dim}")));
        }
        Ok(Self { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn links(&self) -> usize {
        self.n * (self.n - 2)
    }

    pub fn j11(&self) -> DMatrix<f64> {
        let l = self.links();
        self.matrix.view((0, 0), (l, l)).into_owned()
    }

    pub fn j12(&self) -> DMatrix<f64> {
        let l = self.links();
        self.matrix.view((0, l), (l, self.n)).into_owned()
    }

    pub fn j21(&self) -> DMatrix<f64> {
        let l = self.links();
        self.matrix.view((l, 0), (self.n, l)).into_owned()
    }

    pub fn j22(&self) -> DMatrix<f64> {
        let l = self.links();
        self.matrix.view((l, l), (self.n, self.n)).into_owned()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>> {
        super::eigenvalues(&self.matrix)
    }
}

/// Largest absolute entry, zero for an empty block.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Central differences with one Richardson extrapolation step, so the
/// truncation error is fourth order. The zero-temperature field is a
/// low-degree polynomial, for which the result is exact up to rounding.
fn richardson_column<F>(f: &F, z: &[f64], i: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let central = |h: f64| -> Result<Vec<f64>> {
        let mut plus = z.to_vec();
        let mut minus = z.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let (fp, fm) = (f(&plus)?, f(&minus)?);
        Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let fine = central(h)?;
    let coarse = central(2.0 * h)?;
    let column: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite derivative in coordinate {i}")));
    }
    Ok(column)
}

fn finite_difference<F>(n: usize, z: &[f64], steps: &[f64], f: F) -> Result<BlockJacobian>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = z.len();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let column = richardson_column(&f, z, i, steps[i])?;
        m.set_column(i, &nalgebra::DVector::from_vec(column));
    }
    BlockJacobian::new(n, m)
}

/// Base step of the raw-coordinate differences. At `T = 0` the field is
/// polynomial and larger steps only reduce rounding error.
const RAW_STEP_ZERO_T: f64 = 1e-3;
const RAW_STEP: f64 = 1e-4;
const CHART_STEP: f64 = 1e-3;

/// Distance of each free coordinate to where the entropic terms blow up.
fn boundary_room(s: &CoevolState) -> Vec<f64> {
    let n = s.n();
    let mut room = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        let last = s.link(x, last_partner(n, x));
        for y in partners(n, x).take(n - 2) {
            room.push(s.link(x, y).min(last));
        }
    }
    room.extend(s.p().iter().map(|&p| p.min(1.0 - p)));
    room
}

/// Numeric Jacobian of the raw independent-coordinate field at a rest point.
pub fn jacobian_numeric(rp: &RestPoint, fp: &FlowParams) -> Result<BlockJacobian> {
    let rp = rp.under(fp)?;
    let n = rp.state.n();
    let z = rp.state.free_coordinates();
    let steps: Vec<f64> = if fp.temperature > 0.0 {
        boundary_room(&rp.state)
            .iter()
            .zip(&z)
            .map(|(room, v)| (RAW_STEP * v.abs().max(1.0)).min(0.05 * room))
            .collect()
    } else {
        vec![RAW_STEP_ZERO_T; z.len()]
    };
    let f = |z: &[f64]| -> Result<Vec<f64>> {
        let s = CoevolState::from_free_coordinates(n, z)?;
        Ok(field_unchecked(&s, fp).free_components())
    };
    finite_difference(n, &z, &steps, f)
}

/// Numeric Jacobian of the logit-chart velocity. At a rest point it is
/// similar to [`jacobian_numeric`] (same spectrum) and stays accurate for
/// points exponentially close to the boundary.
pub fn jacobian_logit(u: &LogitCoords, fp: &FlowParams) -> Result<BlockJacobian> {
    let n = u.n();
    let steps = vec![CHART_STEP; u.values().len()];
    finite_difference(n, u.values(), &steps, |v: &[f64]| Ok(logit_field_slice(n, v, fp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ReducedGame;

    fn coordination(t: f64) -> FlowParams {
        FlowParams::new(ReducedGame::new(5.0, -2.0, 1.0), 0.0, t).unwrap()
    }

    #[test]
    fn rejects_non_rest_points() {
        let s = CoevolState::symmetric(3, 0.7).unwrap();
        let err = RestPoint::new(s, &coordination(0.0)).unwrap_err();
        assert!(matches!(err, Error::NotRestPoint { .. }));
    }

    #[test]
    fn block_shapes() {
        let rp = RestPoint::new(CoevolState::symmetric(4, 0.0).unwrap(), &coordination(0.0)).unwrap();
        let j = jacobian_numeric(&rp, &coordination(0.0)).unwrap();
        assert_eq!(j.j11().shape(), (8, 8));
        assert_eq!(j.j12().shape(), (8, 4));
        assert_eq!(j.j21().shape(), (4, 8));
        assert_eq!(j.j22().shape(), (4, 4));
    }

    #[test]
    fn zero_temperature_vertex_has_no_strategy_link_coupling() {
        let fp = coordination(0.0);
        for p in [0.0, 1.0] {
            let rp = RestPoint::new(CoevolState::symmetric(3, p).unwrap(), &fp).unwrap();
            let j = jacobian_numeric(&rp, &fp).unwrap();
            assert!(max_abs(&j.j21()) < 1e-7);
            assert!(j.j11().trace().abs() < 1e-7);
        }
    }

    #[test]
    fn constant_game_keeps_only_entropy() {
        let fp = FlowParams::new(ReducedGame::new(0.0, 0.0, 0.0), 0.0, 0.3).unwrap();
        let rp = RestPoint::new(CoevolState::symmetric(3, 0.5).unwrap(), &fp).unwrap();
        let j = jacobian_numeric(&rp, &fp).unwrap();
        let j22 = j.j22();
        for r in 0..3 {
            for c in 0..3 {
                // d/dp of p(1-p) T ln((1-p)/p) at p = 1/2 is -T
                let expect = if r == c { -0.3 } else { 0.0 };
                assert!((j22[(r, c)] - expect).abs() < 1e-9, "{j22}");
            }
        }
    }

    #[test]
    fn chart_and_raw_spectra_agree() {
        let fp = coordination(0.5);
        let u = crate::analysis::symmetric_roots_logit(&fp.game, 3, 0.5)[0];
        let s = CoevolState::symmetric(3, crate::state::sigmoid(u)).unwrap();
        let rp = RestPoint::new(s, &fp).unwrap();
        let mut raw = jacobian_numeric(&rp, &fp).unwrap().eigenvalues().unwrap();
        let mut chart = jacobian_logit(rp.logits().unwrap(), &fp).unwrap().eigenvalues().unwrap();
        crate::analysis::sort_spectrum(&mut raw);
        crate::analysis::sort_spectrum(&mut chart);
        for (a, b) in raw.iter().zip(&chart) {
            assert!((a - b).norm() < 1e-7, "{raw:?} vs {chart:?}");
        }
    }
}
