//! Path losses, RIS aggregation and the two-path amplitude/phase
//! decomposition consumed by the power model.
//!
//! Everything here is linear (watts, power ratios). Decibel values only
//! appear at the configuration boundary via [`db_to_linear`].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::geometry::PathDistances;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Wrap a phase into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    // Adding +0.0 also turns a -0.0 remainder into 0.0.
    if r >= TAU {
        0.0
    } else {
        r + 0.0
    }
}

pub fn wavelength(frequency_hz: f64) -> Result<f64> {
    ensure_positive("frequency", frequency_hz)?;
    Ok(SPEED_OF_LIGHT / frequency_hz)
}

/// Friis free-space loss `(4πd/λ)²` as a linear power ratio.
pub fn free_space_loss(distance: f64, wavelength: f64) -> Result<f64> {
    ensure_positive("distance", distance)?;
    ensure_positive("wavelength", wavelength)?;
    let x = 4.0 * PI * distance / wavelength;
    Ok(x * x)
}

/// Linear antenna gains of the four antennas involved in the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub tx: f64,
    pub rx: f64,
    pub ris_in: f64,
    pub ris_out: f64,
}

impl Gains {
    pub fn from_dbi(tx: f64, rx: f64, ris_in: f64, ris_out: f64) -> Self {
        Self {
            tx: db_to_linear(tx),
            rx: db_to_linear(rx),
            ris_in: db_to_linear(ris_in),
            ris_out: db_to_linear(ris_out),
        }
    }

    pub fn unity() -> Self {
        Self {
            tx: 1.0,
            rx: 1.0,
            ris_in: 1.0,
            ris_out: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    frequency: f64,
    transmit_power: f64,
    gains: Gains,
    excess_loss_direct_db: f64,
}

impl RadioConfig {
    pub fn new(frequency_hz: f64, transmit_power_w: f64, gains: Gains) -> Result<Self> {
        ensure_positive("frequency", frequency_hz)?;
        ensure_positive("transmit power", transmit_power_w)?;
        ensure_positive("tx gain", gains.tx)?;
        ensure_positive("rx gain", gains.rx)?;
        ensure_positive("RIS incident gain", gains.ris_in)?;
        ensure_positive("RIS reflected gain", gains.ris_out)?;
        Ok(Self {
            frequency: frequency_hz,
            transmit_power: transmit_power_w,
            gains,
            excess_loss_direct_db: 0.0,
        })
    }

    /// Extra clutter loss applied to the direct satellite-user path only.
    pub fn with_excess_loss_db(mut self, db: f64) -> Result<Self> {
        ensure_non_negative("excess loss", db)?;
        self.excess_loss_direct_db = db;
        Ok(self)
    }

    pub fn with_transmit_power(mut self, watts: f64) -> Result<Self> {
        ensure_positive("transmit power", watts)?;
        self.transmit_power = watts;
        Ok(self)
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn gains(&self) -> Gains {
        self.gains
    }

    pub fn excess_loss_direct_db(&self) -> f64 {
        self.excess_loss_direct_db
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisElement {
    /// Reflection magnitude `Γ_n`.
    pub gamma: f64,
    /// Element phase shift in radians.
    pub phase: f64,
}

/// Reflecting elements of a surface. Passive surfaces cap every
/// reflection magnitude at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisArray {
    elements: Vec<RisElement>,
    passive: bool,
}

impl RisArray {
    pub fn new(elements: Vec<RisElement>, passive: bool) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty("RIS element list"));
        }
        for e in &elements {
            ensure_non_negative("reflection magnitude", e.gamma)?;
            ensure_finite("element phase", e.phase)?;
            if passive && e.gamma > 1.0 {
                return Err(Error::OutOfRange {
                    name: "reflection magnitude",
                    value: e.gamma,
                    expected: "passive elements need gamma <= 1",
                });
            }
        }
        Ok(Self { elements, passive })
    }

    /// `count` identical elements sharing magnitude and phase.
    pub fn uniform(count: usize, gamma: f64, phase: f64, passive: bool) -> Result<Self> {
        Self::new(vec![RisElement { gamma, phase }; count], passive)
    }

    pub fn elements(&self) -> &[RisElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_passive(&self) -> bool {
        self.passive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReflection {
    pub magnitude: f64,
    /// Phase of the complex sum in `[0, 2π)`; zero when the magnitude is zero.
    pub phase: f64,
}

/// Collapse the element set into the complex sum `Σ Γ_n e^{-jφ_n}`.
///
/// The phase is reported with the same sign convention as the elements, so
/// a single element `(Γ, φ)` aggregates to `(Γ, φ)`.
pub fn aggregate_reflection(ris: &RisArray) -> AggregateReflection {
    let (re, im) = ris.elements.iter().fold((0.0, 0.0), |(re, im), e| {
        let (s, c) = e.phase.sin_cos();
        (re + e.gamma * c, im - e.gamma * s)
    });
    let magnitude = re.hypot(im);
    if magnitude == 0.0 {
        return AggregateReflection {
            magnitude: 0.0,
            phase: 0.0,
        };
    }
    AggregateReflection {
        magnitude,
        phase: wrap_phase(-im.atan2(re)),
    }
}

/// Per-path quantities derived from the scenario geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTerms {
    pub distances: PathDistances,
    pub wavelength: f64,
    /// Direct-path loss including the excess clutter loss.
    pub loss_sat_user: f64,
    pub loss_sat_ris: f64,
    pub loss_ris_user: f64,
    /// Unwrapped propagation phases `2π d / λ`.
    pub phase_sat_user: f64,
    pub phase_sat_ris: f64,
    pub phase_ris_user: f64,
}

/// Two-path decomposition of the received field: amplitudes in √W and the
/// geometric phase offset `Θ = φ_SU − φ_SR − φ_RU` (left unwrapped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub amplitude_direct: f64,
    pub amplitude_reflected: f64,
    pub phase_offset: f64,
    /// Absent for budgets built directly from amplitudes.
    pub paths: Option<PathTerms>,
}

impl LinkBudget {
    /// Bare two-path budget without underlying geometry.
    pub fn from_amplitudes(direct: f64, reflected: f64, phase_offset: f64) -> Result<Self> {
        ensure_positive("direct amplitude", direct)?;
        ensure_non_negative("reflected amplitude", reflected)?;
        ensure_finite("phase offset", phase_offset)?;
        Ok(Self {
            amplitude_direct: direct,
            amplitude_reflected: reflected,
            phase_offset,
            paths: None,
        })
    }

    /// `Θ` wrapped into `[0, 2π)`.
    pub fn wrapped_offset(&self) -> f64 {
        wrap_phase(self.phase_offset)
    }

    /// Direct-path power `A_SU²`, the received power without any RIS.
    pub fn direct_power(&self) -> f64 {
        self.amplitude_direct * self.amplitude_direct
    }

    /// Amplitude of the interference term, `2·A_SU·A_RU`.
    pub fn cross_amplitude(&self) -> f64 {
        2.0 * self.amplitude_direct * self.amplitude_reflected
    }
}

/// Assemble the two-path link budget.
///
/// Transmit power enters each amplitude once as `√P_t`; the power model
/// applies no further prefactor.
pub fn build_link_budget(
    distances: &PathDistances,
    radio: &RadioConfig,
    ris_magnitude: f64,
) -> Result<LinkBudget> {
    ensure_non_negative("RIS magnitude", ris_magnitude)?;
    let lambda = radio.wavelength();
    let g = radio.gains;
    let pt = radio.transmit_power;

    let loss_sat_user =
        free_space_loss(distances.sat_user, lambda)? * db_to_linear(radio.excess_loss_direct_db);
    let loss_sat_ris = free_space_loss(distances.sat_ris, lambda)?;
    let loss_ris_user = free_space_loss(distances.ris_user, lambda)?;

    let amplitude_direct = (pt * g.tx * g.rx / loss_sat_user).sqrt();
    let amplitude_reflected =
        (pt * g.tx * g.ris_in * g.ris_out * g.rx / (loss_sat_ris * loss_ris_user)).sqrt()
            * ris_magnitude;

    let k = TAU / lambda;
    let phase_sat_user = k * distances.sat_user;
    let phase_sat_ris = k * distances.sat_ris;
    let phase_ris_user = k * distances.ris_user;

    Ok(LinkBudget {
        amplitude_direct,
        amplitude_reflected,
        phase_offset: phase_sat_user - phase_sat_ris - phase_ris_user,
        paths: Some(PathTerms {
            distances: *distances,
            wavelength: lambda,
            loss_sat_user,
            loss_sat_ris,
            loss_ris_user,
            phase_sat_user,
            phase_sat_ris,
            phase_ris_user,
        }),
    })
}
