//! Received-power modeling and phase-shift optimization for a satellite
//! downlink assisted by a reconfigurable intelligent surface (RIS).
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: spherical-Earth positions and link distances.
//! - [`link_budget`]: Friis losses, RIS aggregation, two-path amplitudes.
//! - [`power_model`]: ideal and expected received power under uniform
//!   phase errors.
//! - [`optimizers`]: closed-form optimum, Monte Carlo sample averages and a
//!   scalar BFGS maximizer.
//! - [`experiments`]: parameter sweeps with CSV/JSON output.
//! - [`config`]: the JSON scenario file format.
//! - [`cli`]: the `ris-linkopt` command-line interface.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod link_budget;
pub mod optimizers;
pub mod power_model;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{DruCovariation, Scenario};
