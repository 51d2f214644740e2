//! Co-evolving networks of Boltzmann Q-learning agents.
//!
//! Agents pick a partner and an action with a factorized strategy
//! `p_xy^i = c_xy p_x^i`. In the continuous-time limit the strategies `p`
//! and the row-stochastic link matrix `c` follow coupled replicator
//! equations with an entropic exploration term weighted by the temperature
//! `T`. This crate evaluates and integrates those flows, runs the discrete
//! Q-learning process they approximate, locates and classifies rest points,
//! and sweeps temperature and isolation payoff.
//!
//! Module map:
//! - [`game`]: two-action games, isolation payoff, `(a, b, d)` reduction.
//! - [`state`]: strategies plus link matrix, simplex checks, logit chart.
//! - [`dynamics`]: vector fields and the adaptive integrator.
//! - [`agents`]: discrete Q-learning with Boltzmann selection.
//! - [`analysis`]: Jacobians, spectra, rest points, symmetric branch.
//! - [`experiments`]: motif census, sweeps, basin sampling.
//! - [`config`], [`io`], [`cli`]: the command-line surface.

pub mod agents;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod game;
pub mod io;
pub mod seed;
pub mod state;

pub use error::{Error, Result};
pub use game::{GameClass, PayoffSpec, ReducedGame};
pub use state::{CoevolState, JointStrategy, LogitCoords};
