//! Adaptive Dormand–Prince 5(4) integration of the coupled flow.
//!
//! With exploration (`T > 0`) the state is advanced in the logit chart, where
//! the entropic terms keep trajectories away from the boundary. Without
//! exploration the raw coordinates are used and the simplex is restored by
//! clipping after each accepted step; pure vertices are legitimate rest
//! points there.

use serde::{Deserialize, Serialize};

use super::flow::{field_unchecked, logit_field_slice, raw_field_from_logits, FlowParams};
use crate::error::{Error, Result};
use crate::state::{partners, to_logits, CoevolState, LogitCoords, INGEST_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationControls {
    /// Mixed absolute/relative local error tolerance.
    pub local_tol: f64,
    /// Stop once the max-norm of the field drops below this.
    pub equilibrium_tol: f64,
    /// Record a sample every `stride` time units; `None` keeps only the
    /// initial and final states.
    pub sample_stride: Option<f64>,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            local_tol: 1e-9,
            equilibrium_tol: 1e-10,
            sample_stride: None,
            initial_step: 1e-2,
            min_step: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Scaled time `alpha * beta * t_steps`.
    pub t: f64,
    pub state: CoevolState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub steps: usize,
    pub rejected: usize,
    pub final_step: f64,
    pub converged: bool,
    /// Max-norm of the field (in integration coordinates) at the last state.
    pub final_residual: f64,
    /// Exact final point in the logit chart when `T > 0`; the raw state may
    /// round coordinates within machine precision of the boundary.
    pub final_logits: Option<LogitCoords>,
}

impl Trajectory {
    pub fn final_state(&self) -> &CoevolState {
        &self.samples.last().expect("trajectory always has a sample").state
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Max-norm of the raw field at the final state.
    pub fn final_raw_residual(&self, fp: &FlowParams) -> f64 {
        match &self.final_logits {
            Some(u) => raw_field_from_logits(u, fp).max_norm(),
            None => field_unchecked(self.final_state(), fp).max_norm(),
        }
    }
}

enum Coordinates {
    Raw { n: usize },
    Logit { n: usize },
}

impl Coordinates {
    fn encode(&self, s: &CoevolState) -> Result<Vec<f64>> {
        match self {
            Coordinates::Raw { .. } => Ok(s.flat_values()),
            Coordinates::Logit { .. } => Ok(to_logits(s)?.into_values()),
        }
    }

    fn decode(&self, y: &[f64]) -> CoevolState {
        match *self {
            Coordinates::Raw { n } => {
                let mut c = vec![vec![0.0; n]; n];
                let mut k = n;
                for (x, row) in c.iter_mut().enumerate() {
                    for yy in partners(n, x) {
                        row[yy] = y[k];
                        k += 1;
                    }
                }
                CoevolState::new(y[..n].to_vec(), c).expect("shape fixed by encode")
            }
            Coordinates::Logit { n } => {
                crate::state::from_logits(&LogitCoords::new(n, y.to_vec()).expect("shape fixed by encode"))
            }
        }
    }

    fn field(&self, y: &[f64], fp: &FlowParams) -> Vec<f64> {
        match *self {
            Coordinates::Raw { .. } => field_unchecked(&self.decode(y), fp).flat(),
            Coordinates::Logit { n } => logit_field_slice(n, y, fp),
        }
    }

    /// Restores the simplex in raw coordinates. Returns whether anything moved.
    fn project(&self, y: &mut [f64]) -> bool {
        let Coordinates::Raw { n } = *self else { return false };
        let mut moved = false;
        for v in y[..n].iter_mut() {
            let clipped = v.clamp(0.0, 1.0);
            moved |= clipped != *v;
            *v = clipped;
        }
        for row in y[n..].chunks_mut(n - 1) {
            // rows drift off the simplex by rounding; on neutral rows that
            // drift alone would keep the residual above tolerance
            for v in row.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                    moved = true;
                }
            }
            let s: f64 = row.iter().sum();
            if s != 1.0 {
                row.iter_mut().for_each(|v| *v /= s);
                moved = true;
            }
        }
        moved
    }
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrates from `s0` up to scaled time `horizon`, stopping early when the
/// field max-norm falls below `controls.equilibrium_tol`.
pub fn integrate(
    s0: &CoevolState,
    fp: &FlowParams,
    horizon: f64,
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
    }
    if let Some(stride) = controls.sample_stride {
        if !(stride > 0.0) {
            return Err(Error::InvalidInput(format!("sample stride {stride} must be positive")));
        }
    }
    let violations = s0.validate_with(1e-9);
    if !violations.is_empty() {
        return Err(Error::InvalidInput(format!("initial state violates the simplex: {violations:?}")));
    }
    let n = s0.n();
    let exploring = fp.temperature > 0.0;
    let coords = if exploring { Coordinates::Logit { n } } else { Coordinates::Raw { n } };
    let start = if exploring && !s0.is_interior() { s0.clamp_interior(INGEST_MARGIN) } else { s0.clone() };

    let mut y = coords.encode(&start)?;
    coords.project(&mut y);
    let dim = y.len();
    let mut f = coords.field(&y, fp);
    let mut t = 0.0;
    let mut samples = vec![Sample { t, state: coords.decode(&y) }];
    let finish = |y: &[f64], samples: Vec<Sample>, steps, rejected, h, converged, residual| Trajectory {
        samples,
        steps,
        rejected,
        final_step: h,
        converged,
        final_residual: residual,
        final_logits: if exploring { Some(LogitCoords::new(n, y.to_vec()).expect("chart shape")) } else { None },
    };

    let residual = max_norm(&f);
    if residual < controls.equilibrium_tol {
        return Ok(finish(&y, samples, 0, 0, 0.0, true, residual));
    }

    let tol = controls.local_tol;
    // In raw coordinates decaying components settle at the absolute error
    // floor, and their residual is that floor times the decay rate. Keeping
    // the floor well below the equilibrium tolerance lets the stop trigger.
    let abs_tol = if exploring { tol } else { tol.min(0.01 * controls.equilibrium_tol) };
    let mut h = controls.initial_step.min(horizon);
    let mut next_sample = controls.sample_stride;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    loop {
        let target = next_sample.map_or(horizon, |s| s.min(horizon));
        let h_try = h.min(target - t);
        if h_try < controls.min_step && target - t > controls.min_step {
            return Err(Error::Stiffness {
                t,
                state: format!("{:?}", coords.decode(&y).flat_values()),
            });
        }
        if steps + rejected >= controls.max_steps {
            return Err(Error::Numerical(format!("step budget {} exhausted at t = {t}", controls.max_steps)));
        }

        k[0].copy_from_slice(&f);
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h_try * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            k[s] = coords.field(&stage, fp);
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y5[i] = y[i] + h_try * hi;
            let scale = abs_tol + tol * y[i].abs().max(y5[i].abs());
            err = err.max((h_try * (hi - lo)).abs() / scale);
        }
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            if h_try <= controls.min_step {
                return Err(Error::Numerical(format!("non-finite field near t = {t}")));
            }
            rejected += 1;
            h = h_try * 0.1;
            continue;
        }

        if err <= 1.0 {
            t += h_try;
            std::mem::swap(&mut y, &mut y5);
            steps += 1;
            f = if coords.project(&mut y) { coords.field(&y, fp) } else { k[6].clone() };
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite field at t = {t}")));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposal = h_try * factor;
            // a step shortened to hit a sample time says little about the next one
            h = if h_try < h { proposal.max(h) } else { proposal };

            let residual = max_norm(&f);
            let at_sample = next_sample.is_some_and(|s| (t - s).abs() <= 1e-12 * s.max(1.0));
            let done = residual < controls.equilibrium_tol || t >= horizon * (1.0 - 1e-15);
            if at_sample {
                samples.push(Sample { t, state: coords.decode(&y) });
                next_sample = next_sample.map(|s| s + controls.sample_stride.unwrap_or(0.0));
            }
            if done {
                if !at_sample {
                    samples.push(Sample { t, state: coords.decode(&y) });
                }
                let converged = residual < controls.equilibrium_tol;
                return Ok(finish(&y, samples, steps, rejected, h_try, converged, residual));
            }
        } else {
            rejected += 1;
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
}
