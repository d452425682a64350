//! Received power of the direct + RIS-reflected two-path link, ideal and
//! under a uniform additive phase error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::link_budget::LinkBudget;

/// Uniform phase error `δ ~ U(-σ, σ)`; `σ = 0` is the error-free case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseErrorModel {
    sigma: f64,
}

impl PhaseErrorModel {
    pub fn new(sigma: f64) -> Result<Self> {
        ensure_non_negative("sigma", sigma)?;
        Ok(Self { sigma })
    }

    pub fn error_free() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// How a single Monte Carlo sample of the received power is formed.
///
/// `Paper` keeps the `sinc(σ)` attenuation on the cross term *and* applies
/// the drawn error, so its sample mean tends to a `sinc(σ)²`-attenuated
/// cross term. `Sampled` drops the `sinc(σ)` factor; its sample mean
/// converges to [`expected_power_closed_form`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Paper,
    #[default]
    Sampled,
}

impl SampleMode {
    /// Weight on the per-sample cross term.
    pub fn cross_weight(self, err: &PhaseErrorModel) -> f64 {
        match self {
            SampleMode::Paper => sinc(err.sigma),
            SampleMode::Sampled => 1.0,
        }
    }
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SampleMode::Paper),
            "sampled" => Ok(SampleMode::Sampled),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleMode::Paper => "paper",
            SampleMode::Sampled => "sampled",
        })
    }
}

/// Sine cardinal `sin(σ)/σ`, with `sinc(0) = 1`.
pub fn sinc(sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else if sigma.abs() < 1e-8 {
        let s2 = sigma * sigma;
        1.0 - s2 / 6.0 + s2 * s2 / 120.0
    } else {
        sigma.sin() / sigma
    }
}

// The phase offset can reach 1e7 rad at satellite distances; subtracting the
// wrapped offset keeps the cosine argument small.
#[inline]
fn cosine_argument(budget: &LinkBudget, phase: f64) -> f64 {
    phase - budget.wrapped_offset()
}

/// `P_R(φ_R) = A_SU² + A_RU² + 2·A_SU·A_RU·cos(φ_R − Θ)`.
pub fn received_power(budget: &LinkBudget, phase: f64) -> Result<f64> {
    ensure_finite("RIS phase", phase)?;
    Ok(power_with_cross_factor(
        budget,
        cosine_argument(budget, phase).cos(),
    ))
}

/// `dP_R/dφ_R = −2·A_SU·A_RU·sin(φ_R − Θ)`.
pub fn received_power_slope(budget: &LinkBudget, phase: f64) -> Result<f64> {
    ensure_finite("RIS phase", phase)?;
    Ok(-budget.cross_amplitude() * cosine_argument(budget, phase).sin())
}

/// Expected received power under the uniform error, `E[P_R]` with the
/// cross term attenuated by `sinc(σ)`.
pub fn expected_power_closed_form(
    budget: &LinkBudget,
    phase: f64,
    err: &PhaseErrorModel,
) -> Result<f64> {
    ensure_finite("RIS phase", phase)?;
    Ok(power_with_cross_factor(
        budget,
        sinc(err.sigma) * cosine_argument(budget, phase).cos(),
    ))
}

/// Received power for one drawn phase error `delta`.
pub fn sample_power(
    budget: &LinkBudget,
    phase: f64,
    delta: f64,
    err: &PhaseErrorModel,
    mode: SampleMode,
) -> Result<f64> {
    ensure_finite("RIS phase", phase)?;
    ensure_finite("phase error sample", delta)?;
    let cross = mode.cross_weight(err) * (cosine_argument(budget, phase) + delta).cos();
    Ok(power_with_cross_factor(budget, cross))
}

#[inline]
pub(crate) fn power_with_cross_factor(budget: &LinkBudget, factor: f64) -> f64 {
    let a = budget.amplitude_direct;
    let b = budget.amplitude_reflected;
    a * a + b * b + 2.0 * a * b * factor
}
