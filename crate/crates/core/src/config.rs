//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Every key is optional and falls back to the default below, but unknown or
//! repeated keys are errors. Overrides given as `key=value` strings are
//! applied after the file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::game::PayoffSpec;
use crate::dynamics::{FlowParams, IntegrationControls};
use crate::experiments::Axis;

/// Evenly spaced grid `min..=max` with `steps` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn axis(&self, name: &str) -> Result<Axis> {
        Axis::linspace(name, self.min, self.max, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub game: PayoffSpec,
    pub n: usize,
    pub temperature: f64,
    /// Q-learning rate.
    pub alpha: f64,
    pub seed: u64,
    /// Integration horizon in scaled time.
    pub horizon: f64,
    pub tol_local: f64,
    pub tol_equilibrium: f64,
    pub grid_t: GridSpec,
    pub grid_ci: GridSpec,
    pub out_dir: PathBuf,
    /// Random Newton starts per rest-point search.
    pub starts: usize,
    /// Random initial states for basin sampling.
    pub trials: usize,
    /// Q-learning iterations.
    pub steps: usize,
    /// Q-learning trace stride in iterations.
    pub stride: usize,
    /// Trajectory sampling interval in scaled time; 0 keeps the endpoints only.
    pub sample_dt: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            game: PayoffSpec { b11: 4.0, b12: -2.0, b21: 1.0, b22: 0.0, c_iso: 0.0 },
            n: 3,
            temperature: 0.1,
            alpha: crate::agents::DEFAULT_ALPHA,
            seed: 0,
            horizon: 1000.0,
            tol_local: 1e-9,
            tol_equilibrium: 1e-10,
            grid_t: GridSpec { min: 0.02, max: 1.0, steps: 50 },
            grid_ci: GridSpec { min: -6.0, max: 2.0, steps: 401 },
            out_dir: PathBuf::from("out"),
            starts: 20,
            trials: 100,
            steps: 20_000,
            stride: 100,
            sample_dt: 0.0,
        }
    }
}

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "game.b11",
    "game.b12",
    "game.b21",
    "game.b22",
    "game.c_iso",
    "n",
    "temperature",
    "alpha",
    "seed",
    "horizon",
    "tol.local",
    "tol.equilibrium",
    "grid.t.min",
    "grid.t.max",
    "grid.t.steps",
    "grid.ci.min",
    "grid.ci.max",
    "grid.ci.steps",
    "out.dir",
    "starts",
    "trials",
    "steps",
    "stride",
    "sample.dt",
];

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("`{key}`: cannot read `{value}` as {what}"))
}

fn float(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| bad(key, value, "a number"))?;
    if !v.is_finite() {
        return Err(bad(key, value, "a finite number"));
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| bad(key, value, "a non-negative integer"))
}

impl RunConfig {
    /// Parses file text, then applies `overrides` (each `key=value`).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` given twice", lineno + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` must be `key=value`")))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "game.b11" => self.game.b11 = float(key, value)?,
            "game.b12" => self.game.b12 = float(key, value)?,
            "game.b21" => self.game.b21 = float(key, value)?,
            "game.b22" => self.game.b22 = float(key, value)?,
            "game.c_iso" => self.game.c_iso = float(key, value)?,
            "n" => self.n = count(key, value)?,
            "temperature" => self.temperature = float(key, value)?,
            "alpha" => self.alpha = float(key, value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value, "an unsigned 64-bit integer"))?,
            "horizon" => self.horizon = float(key, value)?,
            "tol.local" => self.tol_local = float(key, value)?,
            "tol.equilibrium" => self.tol_equilibrium = float(key, value)?,
            "grid.t.min" => self.grid_t.min = float(key, value)?,
            "grid.t.max" => self.grid_t.max = float(key, value)?,
            "grid.t.steps" => self.grid_t.steps = count(key, value)?,
            "grid.ci.min" => self.grid_ci.min = float(key, value)?,
            "grid.ci.max" => self.grid_ci.max = float(key, value)?,
            "grid.ci.steps" => self.grid_ci.steps = count(key, value)?,
            "out.dir" => {
                if value.is_empty() {
                    return Err(bad(key, value, "a directory path"));
                }
                self.out_dir = PathBuf::from(value)
            }
            "starts" => self.starts = count(key, value)?,
            "trials" => self.trials = count(key, value)?,
            "steps" => self.steps = count(key, value)?,
            "stride" => self.stride = count(key, value)?,
            "sample.dt" => self.sample_dt = float(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Range checks shared by every subcommand.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return fail(format!("n = {} must be at least 2", self.n));
        }
        if self.temperature < 0.0 {
            return fail(format!("temperature {} must be >= 0", self.temperature));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha {} must lie in (0, 1]", self.alpha));
        }
        if !(self.horizon > 0.0) {
            return fail(format!("horizon {} must be positive", self.horizon));
        }
        if !(self.tol_local > 0.0 && self.tol_equilibrium > 0.0) {
            return fail("tolerances must be positive".into());
        }
        for (name, grid) in [("grid.t", &self.grid_t), ("grid.ci", &self.grid_ci)] {
            if grid.steps == 0 {
                return fail(format!("{name}.steps must be at least 1"));
            }
            if grid.steps > 1 && !(grid.max > grid.min) {
                return fail(format!("{name}.max must exceed {name}.min"));
            }
        }
        if self.grid_t.min < 0.0 {
            return fail("grid.t.min must be >= 0".into());
        }
        if self.stride == 0 {
            return fail("stride must be at least 1".into());
        }
        if self.sample_dt < 0.0 {
            return fail("sample.dt must be >= 0".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        FlowParams::from_payoff(&self.game, self.temperature)
    }

    pub fn controls(&self) -> IntegrationControls {
        IntegrationControls {
            local_tol: self.tol_local,
            equilibrium_tol: self.tol_equilibrium,
            sample_stride: (self.sample_dt > 0.0).then_some(self.sample_dt),
            ..IntegrationControls::default()
        }
    }
}
