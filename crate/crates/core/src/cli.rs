//! Command-line entry point.
//!
//! ```text
//! coevo <command> [--config FILE] [--set KEY=VALUE]... [--state FILE] [--threads N]
//! ```
//!
//! Every command first parses and validates the whole configuration (and
//! the state file, if any), then computes, and only then writes its files
//! into `out.dir`. Exit codes: 0 success, 1 configuration or input error,
//! 2 numerical or I/O failure during the run.

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::agents::{run, QRun, QState};
use crate::analysis::{
    classify_stability, critical_temperature, find_rest_points, symmetric_fixed_point, RestPoint, StabilityReport,
};
use crate::config::RunConfig;
use crate::dynamics::{integrate, FlowParams, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::{
    basin_sample, motif_census, sweep_plane, sweep_temperature, BasinOptions, BasinTable, MotifCensus,
    OutcomeFrequency, SweepResult, DEFAULT_RECIPROCITY,
};
use crate::game::{effective_matrix, GameClass, ReducedGame};
use crate::io;
use crate::seed::{derive_seed, item_rng};
use crate::state::{CoevolState, JointStrategy};

/// Interior margin of randomly drawn initial states.
const START_MARGIN: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "coevo", version, about = "Co-evolving networks of Q-learning agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Initial or analysed state as JSON `{"n": .., "p": [..], "c": [[..]]}`.
    /// When given, its size overrides `n`.
    #[arg(long, global = true, value_name = "FILE")]
    pub state: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the replicator flow from `--state` or a random interior state.
    Integrate,
    /// Run discrete Q-learning and record the projected policies.
    Simulate,
    /// Locate rest points with Newton's method and classify each.
    FixedPoints,
    /// Spectrum and verdict of the rest point given by `--state`.
    Stability,
    /// Rest points and symmetric-network stability along the temperature grid.
    SweepTemperature,
    /// Symmetric-network stability over the temperature x isolation-payoff grid.
    SweepPlane,
    /// Motif census of `--state`, or basin sampling from random states.
    Census,
    /// Temperature above which the uniform network becomes stable.
    CriticalTemp,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Simulate => "simulate",
            Command::FixedPoints => "fixed-points",
            Command::Stability => "stability",
            Command::SweepTemperature => "sweep-temperature",
            Command::SweepPlane => "sweep-plane",
            Command::Census => "census",
            Command::CriticalTemp => "critical-temp",
        }
    }
}

/// A fully validated invocation.
struct Job {
    command: Command,
    cfg: RunConfig,
    fp: FlowParams,
    state: Option<CoevolState>,
    rest_point: Option<RestPoint>,
}

enum Outcome {
    Trajectory(Trajectory),
    Simulation(QRun),
    RestPoints(Vec<(RestPoint, StabilityReport)>),
    Stability(RestPoint, StabilityReport),
    Sweep(SweepResult),
    Census(MotifCensus),
    Basin(BasinTable),
    Critical { game: ReducedGame, class: GameClass, critical: Option<f64>, roots_below: Vec<f64> },
}

fn prepare(cli: &Cli) -> Result<Job> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides)?,
        None => RunConfig::parse("", &cli.overrides)?,
    };
    let state = match &cli.state {
        Some(path) => {
            let s = io::read_state_json(path)
                .map_err(|e| Error::Config(format!("cannot load state {}: {e}", path.display())))?;
            let violations = s.validate_with(1e-9);
            if !violations.is_empty() {
                return Err(Error::Config(format!("state {} is not on the simplex: {violations:?}", path.display())));
            }
            cfg.n = s.n();
            Some(s)
        }
        None => None,
    };
    cfg.validate()?;
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let fp = cfg.flow_params().map_err(|e| Error::Config(e.to_string()))?;
    let needs_state = |what: &str| Error::Config(format!("`{what}` needs --state"));
    let mut rest_point = None;
    match cli.command {
        Command::Simulate if cfg.temperature <= 0.0 => {
            return Err(Error::Config("simulate needs temperature > 0 (Boltzmann selection)".into()));
        }
        Command::Simulate if cfg.steps == 0 => return Err(Error::Config("steps must be at least 1".into())),
        Command::Stability => {
            let s = state.clone().ok_or_else(|| needs_state("stability"))?;
            rest_point = Some(RestPoint::new(s, &fp).map_err(|e| Error::Config(e.to_string()))?);
        }
        Command::SweepTemperature => {
            cfg.grid_t.axis("temperature")?;
        }
        Command::SweepPlane => {
            cfg.grid_t.axis("temperature")?;
            cfg.grid_ci.axis("c_iso")?;
        }
        _ => {}
    }
    Ok(Job { command: cli.command, cfg, fp, state, rest_point })
}

fn random_start(cfg: &RunConfig, label: &str) -> Result<CoevolState> {
    CoevolState::random_interior_with(cfg.n, &mut item_rng(cfg.seed, label, 0), START_MARGIN)
}

fn execute(job: &Job) -> Result<Outcome> {
    let cfg = &job.cfg;
    let fp = &job.fp;
    Ok(match job.command {
        Command::Integrate => {
            let s0 = match &job.state {
                Some(s) => s.clone(),
                None => random_start(cfg, "integrate")?,
            };
            Outcome::Trajectory(integrate(&s0, fp, cfg.horizon, &cfg.controls())?)
        }
        Command::Simulate => {
            let qs = match &job.state {
                Some(s) => QState::from_joint(&JointStrategy::from_state(s), cfg.alpha, cfg.temperature)?,
                None => QState::random(cfg.n, cfg.alpha, cfg.temperature, derive_seed(cfg.seed, "simulate", 0))?,
            };
            Outcome::Simulation(run(&qs, &effective_matrix(&cfg.game)?, cfg.steps, cfg.stride)?)
        }
        Command::FixedPoints => {
            let search = find_rest_points(fp, cfg.n, cfg.starts, cfg.seed)?;
            let classified = search
                .points
                .into_iter()
                .map(|rp| classify_stability(&rp, fp).map(|report| (rp, report)))
                .collect::<Result<Vec<_>>>()?;
            Outcome::RestPoints(classified)
        }
        Command::Stability => {
            let rp = job.rest_point.clone().expect("checked in prepare");
            let report = classify_stability(&rp, fp)?;
            Outcome::Stability(rp, report)
        }
        Command::SweepTemperature => {
            let axis = cfg.grid_t.axis("temperature")?;
            Outcome::Sweep(sweep_temperature(&cfg.game, cfg.n, &axis.values, cfg.starts, cfg.seed)?)
        }
        Command::SweepPlane => {
            let t = cfg.grid_t.axis("temperature")?;
            let ci = cfg.grid_ci.axis("c_iso")?;
            Outcome::Sweep(sweep_plane(&cfg.game, cfg.n, &t.values, &ci.values)?)
        }
        Command::Census => match &job.state {
            Some(s) => Outcome::Census(motif_census(s, DEFAULT_RECIPROCITY)),
            None => {
                let opts = BasinOptions { horizon: cfg.horizon, controls: cfg.controls(), ..BasinOptions::default() };
                Outcome::Basin(basin_sample(&cfg.game, cfg.n, cfg.temperature, cfg.trials, cfg.seed, &opts)?)
            }
        },
        Command::CriticalTemp => {
            let game = cfg.game.reduced()?;
            Outcome::Critical {
                game,
                class: game.classify(),
                critical: critical_temperature(&game, cfg.n),
                roots_below: symmetric_fixed_point(&game, cfg.n, 0.0),
            }
        }
    })
}

#[derive(Serialize)]
struct TrajectorySidecar<'a> {
    seed: u64,
    temperature: f64,
    horizon: f64,
    converged: bool,
    steps: usize,
    rejected: usize,
    final_time: f64,
    final_residual: f64,
    initial_state: &'a CoevolState,
    final_state: &'a CoevolState,
}

#[derive(Serialize)]
struct SimulationSidecar<'a> {
    seed: u64,
    alpha: f64,
    temperature: f64,
    steps: usize,
    stride: usize,
    final_projection: &'a CoevolState,
}

#[derive(Serialize)]
struct RestPointRecord<'a> {
    id: usize,
    residual: f64,
    state: &'a CoevolState,
    report: &'a StabilityReport,
}

#[derive(Serialize)]
struct BasinSummary<'a> {
    seed: u64,
    n: usize,
    temperature: f64,
    trials: usize,
    converged: usize,
    non_converged: usize,
    star_partitions: usize,
    motifs_by_size: &'a BTreeMap<usize, usize>,
    outcomes: &'a [OutcomeFrequency],
}

#[derive(Serialize)]
struct CriticalSummary {
    a: f64,
    b: f64,
    d: f64,
    n: usize,
    game_class: String,
    critical_temperature: Option<f64>,
    symmetric_roots_at_zero: Vec<f64>,
}

/// Writes the result files and returns a one-line summary.
fn write(job: &Job, outcome: &Outcome) -> Result<String> {
    let cfg = &job.cfg;
    let dir = cfg.out_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let name = job.command.name();
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    let files = |paths: &[&Path]| paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
    Ok(match outcome {
        Outcome::Trajectory(traj) => {
            io::write_trajectory_csv(&csv, traj)?;
            io::write_json(
                &json,
                &TrajectorySidecar {
                    seed: cfg.seed,
                    temperature: cfg.temperature,
                    horizon: cfg.horizon,
                    converged: traj.converged,
                    steps: traj.steps,
                    rejected: traj.rejected,
                    final_time: traj.final_time(),
                    final_residual: traj.final_raw_residual(&job.fp),
                    initial_state: &traj.samples[0].state,
                    final_state: traj.final_state(),
                },
            )?;
            format!(
                "integrated to t = {} ({}converged); wrote {}",
                traj.final_time(),
                if traj.converged { "" } else { "not " },
                files(&[&csv, &json])
            )
        }
        Outcome::Simulation(run) => {
            io::write_policy_trace_csv(&csv, run)?;
            io::write_json(
                &json,
                &SimulationSidecar {
                    seed: cfg.seed,
                    alpha: run.alpha,
                    temperature: run.temperature,
                    steps: cfg.steps,
                    stride: cfg.stride,
                    final_projection: &run.final_projection,
                },
            )?;
            format!("ran {} Q-learning steps; wrote {}", cfg.steps, files(&[&csv, &json]))
        }
        Outcome::RestPoints(points) => {
            io::write_rest_points_csv(&csv, points)?;
            let records: Vec<_> = points
                .iter()
                .enumerate()
                .map(|(id, (rp, report))| RestPointRecord { id, residual: rp.residual, state: &rp.state, report })
                .collect();
            io::write_json(&json, &records)?;
            format!("found {} rest points; wrote {}", points.len(), files(&[&csv, &json]))
        }
        Outcome::Stability(rp, report) => {
            io::write_json(&json, &RestPointRecord { id: 0, residual: rp.residual, state: &rp.state, report })?;
            format!(
                "{} {} (max real part {:.3e}); wrote {}",
                report.matched_configuration,
                report.classification,
                report.max_real,
                files(&[&json])
            )
        }
        Outcome::Sweep(result) => {
            io::write_sweep_csv(&csv, result)?;
            io::write_sweep_summary(&json, result)?;
            let tc = result.critical_temperature.map_or("none".to_string(), |t| format!("{t}"));
            format!("swept {} grid points, transition at T = {tc}; wrote {}", result.points.len(), files(&[&csv, &json]))
        }
        Outcome::Census(census) => {
            io::write_json(&json, census)?;
            format!("census {}; wrote {}", census.signature(), files(&[&json]))
        }
        Outcome::Basin(table) => {
            let basin_csv = dir.join("basin.csv");
            let basin_json = dir.join("basin.json");
            io::write_basin_csv(&basin_csv, table)?;
            io::write_json(
                &basin_json,
                &BasinSummary {
                    seed: cfg.seed,
                    n: cfg.n,
                    temperature: cfg.temperature,
                    trials: table.trials,
                    converged: table.converged,
                    non_converged: table.non_converged,
                    star_partitions: table.star_partitions,
                    motifs_by_size: &table.motifs_by_size,
                    outcomes: &table.outcomes,
                },
            )?;
            let top = table.dominant().map_or("none".to_string(), |o| format!("{} ({})", o.signature, o.count));
            format!(
                "{} of {} trials converged, most frequent {top}; wrote {}",
                table.converged,
                table.trials,
                files(&[&basin_csv, &basin_json])
            )
        }
        Outcome::Critical { game, class, critical, roots_below } => {
            io::write_critical_csv(&csv, cfg.game.c_iso, *critical)?;
            io::write_json(
                &json,
                &CriticalSummary {
                    a: game.a,
                    b: game.b,
                    d: game.d,
                    n: cfg.n,
                    game_class: class.to_string(),
                    critical_temperature: *critical,
                    symmetric_roots_at_zero: roots_below.clone(),
                },
            )?;
            match critical {
                Some(t) => format!("T_c = {t:.6}; wrote {}", files(&[&csv, &json])),
                None => format!("no critical temperature for a {class} game; wrote {}", files(&[&csv, &json])),
            }
        }
    })
}

fn run_job(cli: &Cli) -> std::result::Result<String, (i32, Error)> {
    let job = prepare(cli).map_err(|e| (1, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(|e| (2, Error::Numerical(format!("cannot start worker pool: {e}"))))?;
    let outcome = pool.install(|| execute(&job)).map_err(|e| (2, e))?;
    write(&job, &outcome).map_err(|e| (2, e))
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_job(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err((code, e)) => {
            eprintln!("coevo {}: {e}", cli.command.name());
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("coevo").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_global_flags_after_the_command() {
        let c = cli(&["census", "--set", "n=5", "--set", "seed=2", "--threads", "2"]);
        assert_eq!(c.command, Command::Census);
        assert_eq!(c.overrides, vec!["n=5", "seed=2"]);
        assert_eq!(c.threads, Some(2));
    }

    #[test]
    fn stability_without_state_is_a_config_error() {
        assert!(matches!(prepare(&cli(&["stability"])), Err(Error::Config(_))));
    }

    #[test]
    fn simulate_at_zero_temperature_is_a_config_error() {
        assert!(matches!(prepare(&cli(&["simulate", "--set", "temperature=0"])), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_exits_one() {
        assert_eq!(main_with_args(["coevo", "critical-temp", "--set", "bogus=1"]), 1);
    }
}
