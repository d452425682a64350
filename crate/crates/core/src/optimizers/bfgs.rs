//! Scalar BFGS with a weak-Wolfe line search, maximizing a periodic
//! expected-power objective over the RIS phase.
//!
//! The maximizer minimizes `f(φ) = −c(φ)/ĉ`, the objective's cross factor
//! normalized by its swing, so gradients and tolerances are dimensionless
//! and O(1) whatever the absolute power level. With a single decision
//! variable the Hessian approximation is a positive scalar.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::monte_carlo::PhaseObjective;
use crate::error::{Error, Result};
use crate::link_budget::wrap_phase;

const MAX_LINE_SEARCH_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsConfig {
    pub initial_phase: f64,
    pub initial_hessian: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub multistart_count: usize,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            initial_phase: 0.0,
            initial_hessian: 1.0,
            tolerance: 1e-8,
            max_iterations: 200,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            multistart_count: 4,
        }
    }
}

impl BfgsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !self.initial_phase.is_finite() {
            return bad("initial phase must be finite");
        }
        if !(self.initial_hessian > 0.0 && self.initial_hessian.is_finite()) {
            return bad("initial Hessian must be positive");
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad("Wolfe constants need 0 < c1 < c2 < 1");
        }
        if self.multistart_count == 0 {
            return bad("multistart_count must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The objective does not depend on the phase.
    FlatObjective,
    GradientNorm,
    ObjectiveChange,
    LineSearchFailed,
    MaxIterations,
}

/// One accepted BFGS iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    /// Unwrapped phase of the iterate.
    pub phase: f64,
    /// Objective value in watts.
    pub objective: f64,
    /// Normalized gradient magnitude.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Maximizing phase in `[0, 2π)`.
    pub optimal_phase: f64,
    /// Objective value at the optimum, in watts.
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
    pub stop_reason: StopReason,
    /// Index of the winning start among the multistart phases.
    pub start_index: usize,
    /// Iterates of the winning start, starting point included.
    pub history: Vec<IterateRecord>,
}

impl OptimizationResult {
    /// Objective at the iterate preceding the final one, or at the final one
    /// when the run stopped at its starting point.
    pub fn penultimate_objective(&self) -> f64 {
        let n = self.history.len();
        if n >= 2 {
            self.history[n - 2].objective
        } else {
            self.objective_value
        }
    }
}

struct Normalized<'a, O: PhaseObjective + ?Sized> {
    objective: &'a O,
    swing: f64,
}

impl<O: PhaseObjective + ?Sized> Normalized<'_, O> {
    /// `(f, f')` of the minimized function.
    fn eval(&self, x: f64) -> (f64, f64) {
        let (c, dc) = self.objective.cross_factor(x);
        (-c / self.swing, -dc / self.swing)
    }
}

struct LineSearchStep {
    alpha: f64,
    value: f64,
    gradient: f64,
}

/// Weak-Wolfe step by bracketing: halve towards the last sufficient-decrease
/// failure, double while the curvature condition fails with no upper bracket.
fn wolfe_line_search<O: PhaseObjective + ?Sized>(
    f: &Normalized<'_, O>,
    x: f64,
    value: f64,
    gradient: f64,
    direction: f64,
    c1: f64,
    c2: f64,
) -> Option<LineSearchStep> {
    let slope0 = gradient * direction;
    debug_assert!(slope0 < 0.0);
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut alpha = 1.0;
    for _ in 0..MAX_LINE_SEARCH_STEPS {
        let (v, g) = f.eval(x + alpha * direction);
        if v > value + c1 * alpha * slope0 {
            hi = alpha;
        } else if g * direction < c2 * slope0 {
            lo = alpha;
        } else {
            return Some(LineSearchStep {
                alpha,
                value: v,
                gradient: g,
            });
        }
        alpha = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * lo
        };
    }
    None
}

struct RunOutcome {
    phase: f64,
    gradient: f64,
    iterations: usize,
    converged: bool,
    stop_reason: StopReason,
    history: Vec<IterateRecord>,
}

fn run_from<O: PhaseObjective + ?Sized>(
    f: &Normalized<'_, O>,
    start: f64,
    cfg: &BfgsConfig,
) -> RunOutcome {
    let eps = cfg.tolerance;
    let record = |x: f64, g: f64| IterateRecord {
        phase: x,
        objective: f.objective.power(x),
        gradient_norm: g.abs(),
    };

    let mut x = start;
    let (mut value, mut gradient) = f.eval(x);
    let mut hessian = cfg.initial_hessian;
    let mut history = vec![record(x, gradient)];
    let mut iterations = 0;

    if gradient.abs() <= eps {
        return RunOutcome {
            phase: x,
            gradient,
            iterations,
            converged: true,
            stop_reason: StopReason::GradientNorm,
            history,
        };
    }

    while iterations < cfg.max_iterations {
        let direction = -gradient / hessian;
        let Some(step) =
            wolfe_line_search(f, x, value, gradient, direction, cfg.wolfe_c1, cfg.wolfe_c2)
        else {
            return RunOutcome {
                phase: x,
                gradient,
                iterations,
                converged: false,
                stop_reason: StopReason::LineSearchFailed,
                history,
            };
        };

        let s = step.alpha * direction;
        let y = step.gradient - gradient;
        let previous = value;
        x += s;
        value = step.value;
        gradient = step.gradient;
        iterations += 1;
        history.push(record(x, gradient));

        // H + y yᵀ/(yᵀs) − H s sᵀ H/(sᵀ H s); for a scalar this is y/s.
        let ys = y * s;
        if ys.abs() >= 1e-12 * y.abs() * s.abs() && ys != 0.0 {
            let updated = hessian + y * y / ys - (hessian * s) * (s * hessian) / (s * hessian * s);
            if updated > 0.0 && updated.is_finite() {
                hessian = updated;
            }
        }

        if gradient.abs() <= eps {
            return RunOutcome {
                phase: x,
                gradient,
                iterations,
                converged: true,
                stop_reason: StopReason::GradientNorm,
                history,
            };
        }
        if (previous - value).abs() <= eps * (1.0 + value.abs()) {
            return RunOutcome {
                phase: x,
                gradient,
                iterations,
                converged: true,
                stop_reason: StopReason::ObjectiveChange,
                history,
            };
        }
    }

    RunOutcome {
        phase: x,
        gradient,
        iterations,
        converged: false,
        stop_reason: StopReason::MaxIterations,
        history,
    }
}

/// Maximize a periodic objective over the phase from `multistart_count`
/// equally spaced starts; the start with the largest final objective wins.
///
/// Hitting `max_iterations` is not an error: the best iterate is returned
/// with `converged = false`.
pub fn maximize<O: PhaseObjective + ?Sized>(
    objective: &O,
    cfg: &BfgsConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let swing = objective.cross_swing();
    if objective.budget().cross_amplitude() == 0.0 || swing == 0.0 {
        let phase = wrap_phase(cfg.initial_phase);
        let value = objective.power(phase);
        return Ok(OptimizationResult {
            optimal_phase: phase,
            objective_value: value,
            iterations: 0,
            converged: true,
            final_gradient_norm: 0.0,
            stop_reason: StopReason::FlatObjective,
            start_index: 0,
            history: vec![IterateRecord {
                phase,
                objective: value,
                gradient_norm: 0.0,
            }],
        });
    }

    let f = Normalized { objective, swing };
    let m = cfg.multistart_count;
    let mut best: Option<(usize, RunOutcome, f64)> = None;
    for k in 0..m {
        let start = cfg.initial_phase + TAU * k as f64 / m as f64;
        let run = run_from(&f, start, cfg);
        let value = objective.power(run.phase);
        let better = match &best {
            None => true,
            Some((_, _, v)) => value > *v,
        };
        if better {
            best = Some((k, run, value));
        }
    }
    let (start_index, run, value) = best.expect("at least one start");
    Ok(OptimizationResult {
        optimal_phase: wrap_phase(run.phase),
        objective_value: value,
        iterations: run.iterations,
        converged: run.converged,
        final_gradient_norm: run.gradient.abs(),
        stop_reason: run.stop_reason,
        start_index,
        history: run.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_budget::LinkBudget;
    use crate::optimizers::{optimal_phase_ideal, phase_distance, ClosedFormObjective};
    use crate::power_model::PhaseErrorModel;

    #[test]
    fn config_validation() {
        assert!(BfgsConfig::default().validate().is_ok());
        let bad = [
            BfgsConfig {
                tolerance: 0.0,
                ..Default::default()
            },
            BfgsConfig {
                initial_hessian: -1.0,
                ..Default::default()
            },
            BfgsConfig {
                wolfe_c1: 0.9,
                wolfe_c2: 0.5,
                ..Default::default()
            },
            BfgsConfig {
                wolfe_c2: 1.0,
                ..Default::default()
            },
            BfgsConfig {
                max_iterations: 0,
                ..Default::default()
            },
            BfgsConfig {
                multistart_count: 0,
                ..Default::default()
            },
            BfgsConfig {
                initial_phase: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn closed_form_maximum_found() {
        let b = LinkBudget::from_amplitudes(2.0, 0.3, -41.7).unwrap();
        let obj = ClosedFormObjective::new(b, &PhaseErrorModel::new(0.5).unwrap());
        let r = maximize(&obj, &BfgsConfig::default()).unwrap();
        assert!(r.converged);
        assert!(phase_distance(r.optimal_phase, optimal_phase_ideal(&b)) < 1e-7);
        assert!(r.final_gradient_norm <= 1e-8 || r.stop_reason == StopReason::ObjectiveChange);
    }

    #[test]
    fn flat_objective_converges_immediately() {
        let b = LinkBudget::from_amplitudes(1.0, 0.0, 1.0).unwrap();
        let obj = ClosedFormObjective::new(b, &PhaseErrorModel::error_free());
        let r = maximize(&obj, &BfgsConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_gradient_norm, 0.0);
        assert_eq!(r.stop_reason, StopReason::FlatObjective);
        assert_eq!(r.objective_value, 1.0);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let b = LinkBudget::from_amplitudes(1.0, 1.0, 2.0).unwrap();
        let obj = ClosedFormObjective::new(b, &PhaseErrorModel::error_free());
        let cfg = BfgsConfig {
            max_iterations: 1,
            multistart_count: 1,
            initial_phase: 4.0,
            ..Default::default()
        };
        let r = maximize(&obj, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.stop_reason, StopReason::MaxIterations);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.history.len(), 2);
    }

    #[test]
    fn start_on_the_minimum_is_rescued_by_multistart() {
        let theta = 1.0;
        let b = LinkBudget::from_amplitudes(1.0, 1.0, theta).unwrap();
        let obj = ClosedFormObjective::new(b, &PhaseErrorModel::error_free());
        let single = BfgsConfig {
            initial_phase: theta + std::f64::consts::PI,
            multistart_count: 1,
            ..Default::default()
        };
        let stuck = maximize(&obj, &single).unwrap();
        assert!(stuck.objective_value < 1e-12);
        let multi = BfgsConfig {
            multistart_count: 4,
            ..single
        };
        let r = maximize(&obj, &multi).unwrap();
        assert!((r.objective_value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn descent_along_history() {
        let b = LinkBudget::from_amplitudes(1.0, 0.8, 5.5).unwrap();
        let obj = ClosedFormObjective::new(b, &PhaseErrorModel::new(1.3).unwrap());
        let cfg = BfgsConfig {
            multistart_count: 1,
            initial_phase: 0.3,
            ..Default::default()
        };
        let r = maximize(&obj, &cfg).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1].objective >= w[0].objective);
        }
        assert!(r.penultimate_objective() <= r.objective_value);
    }
}
