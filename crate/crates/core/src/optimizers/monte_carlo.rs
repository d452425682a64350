//! Monte Carlo estimation of the expected received power and the
//! sample-average objectives handed to the BFGS maximizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bfgs::{maximize, BfgsConfig, OptimizationResult};
use crate::error::{ensure_finite, Error, Result};
use crate::link_budget::LinkBudget;
use crate::power_model::{
    power_with_cross_factor, sample_power, sinc, PhaseErrorModel, SampleMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub sample_count: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(sample_count: usize, seed: u64) -> Result<Self> {
        let mc = Self { sample_count, seed };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            sample_count: 100_000,
            seed: 42,
        }
    }
}

/// Draw `K` phase errors `δ_i = σ(2u_i − 1)` from a ChaCha8 stream seeded
/// with `mc.seed`. The `u_i` do not depend on `σ`, so runs that differ only
/// in `σ` see scaled copies of the same draws.
pub fn draw_errors(err: &PhaseErrorModel, mc: &McConfig) -> Result<Vec<f64>> {
    mc.validate()?;
    let sigma = err.sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    Ok((0..mc.sample_count)
        .map(|_| {
            let u: f64 = rng.random();
            sigma * (2.0 * u - 1.0)
        })
        .collect())
}

/// Sample mean of the received power over a fixed error set.
pub fn mean_sample_power(
    budget: &LinkBudget,
    phase: f64,
    errors: &[f64],
    err: &PhaseErrorModel,
    mode: SampleMode,
) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("phase error samples"));
    }
    let mut total = 0.0;
    for &delta in errors {
        total += sample_power(budget, phase, delta, err, mode)?;
    }
    Ok(total / errors.len() as f64)
}

/// Monte Carlo estimate `(1/K)·Σ P_R(φ_R, δ_i)` over the seeded error draws.
pub fn estimate_expected_power(
    budget: &LinkBudget,
    phase: f64,
    err: &PhaseErrorModel,
    mc: &McConfig,
    mode: SampleMode,
) -> Result<f64> {
    let errors = draw_errors(err, mc)?;
    mean_sample_power(budget, phase, &errors, err, mode)
}

/// Derivative of the sample-mean power with respect to `φ_R` on a fixed
/// error set: `−(1/K)·Σ 2·A_SU·A_RU·w·sin(φ_R − Θ + δ_i)`, with `w = sinc(σ)`
/// in paper mode and 1 otherwise.
pub fn analytic_gradient(
    budget: &LinkBudget,
    phase: f64,
    errors: &[f64],
    err: &PhaseErrorModel,
    mode: SampleMode,
) -> Result<f64> {
    ensure_finite("RIS phase", phase)?;
    if errors.is_empty() {
        return Err(Error::Empty("phase error samples"));
    }
    let x = phase - budget.wrapped_offset();
    let total: f64 = errors.iter().map(|&d| (x + d).sin()).sum();
    Ok(-budget.cross_amplitude() * mode.cross_weight(err) * total / errors.len() as f64)
}

/// A smooth, 2π-periodic expected-power objective in `φ_R`.
///
/// Implementors expose the phase-dependent part as a factor `c(φ)` on the
/// interference amplitude `2·A_SU·A_RU`, so the optimizer can work on an
/// O(1) quantity regardless of the link's absolute power level.
pub trait PhaseObjective {
    fn budget(&self) -> &LinkBudget;

    /// `c(φ)` and `dc/dφ`.
    fn cross_factor(&self, phase: f64) -> (f64, f64);

    /// Peak value of `|c|` over a period; zero for a flat objective.
    fn cross_swing(&self) -> f64;

    /// Objective value in watts.
    fn power(&self, phase: f64) -> f64 {
        power_with_cross_factor(self.budget(), self.cross_factor(phase).0)
    }

    /// Objective slope in W/rad.
    fn slope(&self, phase: f64) -> f64 {
        self.budget().cross_amplitude() * self.cross_factor(phase).1
    }
}

/// `E[P_R]` in closed form: the cross term scaled by `sinc(σ)`.
#[derive(Debug, Clone)]
pub struct ClosedFormObjective {
    budget: LinkBudget,
    offset: f64,
    attenuation: f64,
}

impl ClosedFormObjective {
    pub fn new(budget: LinkBudget, err: &PhaseErrorModel) -> Self {
        Self {
            offset: budget.wrapped_offset(),
            budget,
            attenuation: sinc(err.sigma()),
        }
    }
}

impl PhaseObjective for ClosedFormObjective {
    fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    fn cross_factor(&self, phase: f64) -> (f64, f64) {
        let (s, c) = (phase - self.offset).sin_cos();
        (self.attenuation * c, -self.attenuation * s)
    }

    fn cross_swing(&self) -> f64 {
        self.attenuation.abs()
    }
}

/// Sample-average approximation of `E[P_R]` over a frozen error set.
///
/// Since `Σ cos(x + δ_i) = cos x·Σ cos δ_i − sin x·Σ sin δ_i`, the sample
/// mean is carried by the two trigonometric moments of the draws and each
/// evaluation is O(1) regardless of `K`.
#[derive(Debug, Clone)]
pub struct SampleAverage {
    budget: LinkBudget,
    errors: Vec<f64>,
    err: PhaseErrorModel,
    mode: SampleMode,
    offset: f64,
    weight: f64,
    mean_cos: f64,
    mean_sin: f64,
}

impl SampleAverage {
    pub fn new(
        budget: LinkBudget,
        errors: Vec<f64>,
        err: PhaseErrorModel,
        mode: SampleMode,
    ) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Empty("phase error samples"));
        }
        let k = errors.len() as f64;
        let (sum_cos, sum_sin) = errors.iter().fold((0.0, 0.0), |(c, s), &d| {
            let (sd, cd) = d.sin_cos();
            (c + cd, s + sd)
        });
        Ok(Self {
            offset: budget.wrapped_offset(),
            weight: mode.cross_weight(&err),
            budget,
            errors,
            err,
            mode,
            mean_cos: sum_cos / k,
            mean_sin: sum_sin / k,
        })
    }

    /// Draw the error set for `mc` and freeze it.
    pub fn draw(
        budget: LinkBudget,
        err: PhaseErrorModel,
        mc: &McConfig,
        mode: SampleMode,
    ) -> Result<Self> {
        let errors = draw_errors(&err, mc)?;
        Self::new(budget, errors, err, mode)
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    /// Term-by-term sample mean, the reference the moment form reproduces.
    pub fn direct_mean(&self, phase: f64) -> Result<f64> {
        mean_sample_power(&self.budget, phase, &self.errors, &self.err, self.mode)
    }
}

impl PhaseObjective for SampleAverage {
    fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    fn cross_factor(&self, phase: f64) -> (f64, f64) {
        let (s, c) = (phase - self.offset).sin_cos();
        (
            self.weight * (c * self.mean_cos - s * self.mean_sin),
            -self.weight * (s * self.mean_cos + c * self.mean_sin),
        )
    }

    fn cross_swing(&self) -> f64 {
        self.weight.abs() * self.mean_cos.hypot(self.mean_sin)
    }
}

/// Maximize the sample-average expected power. The error set is drawn once
/// per run, so every BFGS iteration sees the same deterministic objective.
pub fn optimize_stochastic(
    budget: &LinkBudget,
    err: &PhaseErrorModel,
    mc: &McConfig,
    bfgs: &BfgsConfig,
    mode: SampleMode,
) -> Result<OptimizationResult> {
    bfgs.validate()?;
    let objective = SampleAverage::draw(*budget, *err, mc, mode)?;
    maximize(&objective, bfgs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> LinkBudget {
        LinkBudget::from_amplitudes(1.3, 0.7, 4.2).unwrap()
    }

    #[test]
    fn zero_sigma_draws_are_zero() {
        let e = draw_errors(
            &PhaseErrorModel::error_free(),
            &McConfig::new(17, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(e.len(), 17);
        assert!(e.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn draws_are_deterministic_and_bounded() {
        let err = PhaseErrorModel::new(0.9).unwrap();
        let mc = McConfig::new(1000, 1234).unwrap();
        let a = draw_errors(&err, &mc).unwrap();
        let b = draw_errors(&err, &mc).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|d| (-0.9..=0.9).contains(d)));
        let c = draw_errors(&err, &McConfig::new(1000, 1235).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(McConfig::new(0, 1).is_err());
        let bad = McConfig {
            sample_count: 0,
            seed: 1,
        };
        assert!(draw_errors(&PhaseErrorModel::error_free(), &bad).is_err());
        assert!(analytic_gradient(
            &budget(),
            0.0,
            &[],
            &PhaseErrorModel::error_free(),
            SampleMode::Sampled
        )
        .is_err());
    }

    #[test]
    fn estimate_without_error_is_exact() {
        let b = budget();
        let mc = McConfig::new(500, 9).unwrap();
        let est = estimate_expected_power(
            &b,
            1.0,
            &PhaseErrorModel::error_free(),
            &mc,
            SampleMode::Sampled,
        )
        .unwrap();
        let exact = crate::power_model::received_power(&b, 1.0).unwrap();
        assert!((est - exact).abs() < 1e-14);
    }

    #[test]
    fn single_sample_mean() {
        let b = budget();
        let err = PhaseErrorModel::new(0.6).unwrap();
        let mc = McConfig::new(1, 77).unwrap();
        let delta = draw_errors(&err, &mc).unwrap()[0];
        for mode in [SampleMode::Paper, SampleMode::Sampled] {
            let est = estimate_expected_power(&b, 2.5, &err, &mc, mode).unwrap();
            assert_eq!(est, sample_power(&b, 2.5, delta, &err, mode).unwrap());
        }
    }

    #[test]
    fn gradient_edge_cases() {
        let b = budget();
        let err = PhaseErrorModel::error_free();
        let g =
            analytic_gradient(&b, b.phase_offset, &[0.0; 4], &err, SampleMode::Sampled).unwrap();
        assert!(g.abs() < 1e-12);

        let flat = LinkBudget::from_amplitudes(1.0, 0.0, 0.3).unwrap();
        for phi in [0.0, 1.0, 3.0] {
            let g = analytic_gradient(
                &flat,
                phi,
                &[0.1, -0.2],
                &PhaseErrorModel::new(0.3).unwrap(),
                SampleMode::Paper,
            )
            .unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn moment_form_matches_direct_mean() {
        let b = budget();
        for mode in [SampleMode::Paper, SampleMode::Sampled] {
            let saa = SampleAverage::draw(
                b,
                PhaseErrorModel::new(1.1).unwrap(),
                &McConfig::new(2000, 5).unwrap(),
                mode,
            )
            .unwrap();
            for k in 0..50 {
                let phi = k as f64 * 0.13;
                let direct = saa.direct_mean(phi).unwrap();
                assert!((saa.power(phi) - direct).abs() < 1e-13 * direct.abs().max(1.0));
                let g = analytic_gradient(
                    &b,
                    phi,
                    saa.errors(),
                    &PhaseErrorModel::new(1.1).unwrap(),
                    mode,
                )
                .unwrap();
                assert!((saa.slope(phi) - g).abs() < 1e-13);
            }
        }
    }
}
