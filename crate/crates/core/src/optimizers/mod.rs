//! RIS phase optimization: the closed-form optimum of the error-free power
//! and a sample-average + BFGS maximizer of the expected power under phase
//! errors.

mod bfgs;
mod monte_carlo;

use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

pub use bfgs::{maximize, BfgsConfig, IterateRecord, OptimizationResult, StopReason};
pub use monte_carlo::{
    analytic_gradient, draw_errors, estimate_expected_power, mean_sample_power,
    optimize_stochastic, ClosedFormObjective, McConfig, PhaseObjective, SampleAverage,
};

use crate::link_budget::LinkBudget;

/// Optimal error-free RIS phase `Θ − 2π⌊Θ/2π⌋`, in `[0, 2π)`.
pub fn optimal_phase_ideal(budget: &LinkBudget) -> f64 {
    let theta = budget.phase_offset;
    let phase = theta - TAU * (theta / TAU).floor();
    // Rounding in the product can land a hair outside the half-open range.
    if !(0.0..TAU).contains(&phase) {
        crate::link_budget::wrap_phase(phase)
    } else {
        phase
    }
}

/// Stationary points `Θ + πn` of the error-free power for `n` in `range`.
/// Even `n` are maxima, odd `n` minima.
pub fn stationary_phases(budget: &LinkBudget, range: RangeInclusive<i64>) -> Vec<f64> {
    range.map(|n| budget.phase_offset + PI * n as f64).collect()
}

/// Shortest angular separation of two phases, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
