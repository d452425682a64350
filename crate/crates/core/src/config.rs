//! JSON scenario files: degrees, dBi and watts on disk; radians and linear
//! units once converted into a [`Scenario`].
//!
//! Loading distinguishes three failure classes (unreadable file, malformed
//! JSON, schema/range violations); validation errors carry the dotted path
//! of the offending field, e.g. `radio.frequency_hz`.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{EarthModel, GeodeticPoint, MEAN_EARTH_RADIUS_M};
use crate::link_budget::{Gains, RadioConfig, RisArray, RisElement};
use crate::optimizers::{BfgsConfig, McConfig};
use crate::power_model::PhaseErrorModel;
use crate::scenario::Scenario;

/// Offset applied to the Monte Carlo seed for the phases of a
/// non-coherent surface, so they do not reuse the phase-error stream.
const SURFACE_PHASE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, source: io::Error },
    Parse(serde_json::Error),
    Validation { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Validation {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            ConfigError::Parse(e) => write!(f, "malformed JSON: {e}"),
            ConfigError::Validation { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Io { source, .. } => Some(source),
            ConfigError::Parse(e) => Some(e),
            ConfigError::Validation { .. } => None,
        }
    }
}

fn zero() -> f64 {
    0.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundSpec {
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default = "zero")]
    pub alt_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub gamma: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformElements {
    pub count: usize,
    pub gamma: f64,
    pub coherent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementsSpec {
    List(Vec<ElementSpec>),
    Uniform(UniformElements),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSpec {
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default = "zero")]
    pub alt_m: f64,
    pub elements: ElementsSpec,
    #[serde(default = "yes")]
    pub passive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsDbi {
    pub tx: f64,
    pub rx: f64,
    pub ris_in: f64,
    pub ris_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSpec {
    pub frequency_hz: f64,
    pub tx_power_w: f64,
    pub gains_dbi: GainsDbi,
    #[serde(default = "zero")]
    pub excess_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSpec {
    #[serde(default = "zero")]
    pub sigma_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        let mc = McConfig::default();
        Self {
            samples: mc.sample_count,
            seed: mc.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BfgsSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub multistart: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for BfgsSpec {
    fn default() -> Self {
        let b = BfgsConfig::default();
        Self {
            tolerance: b.tolerance,
            max_iterations: b.max_iterations,
            multistart: b.multistart_count,
            wolfe_c1: b.wolfe_c1,
            wolfe_c2: b.wolfe_c2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarthSpec {
    pub radius_m: f64,
}

impl Default for EarthSpec {
    fn default() -> Self {
        Self {
            radius_m: MEAN_EARTH_RADIUS_M,
        }
    }
}

/// On-disk scenario description. Absent optional fields take their defaults
/// at parse time, so re-serializing a parsed file writes every field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub satellite: SatelliteSpec,
    pub ris: RisSpec,
    pub user: GroundSpec,
    pub radio: RadioSpec,
    #[serde(default)]
    pub error: ErrorSpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub bfgs: BfgsSpec,
    #[serde(default)]
    pub earth: EarthSpec,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            match missing_field(&inner) {
                Some(field) if path == "." => ConfigError::invalid(field, "missing required field"),
                Some(field) => {
                    ConfigError::invalid(format!("{path}.{field}"), "missing required field")
                }
                None => ConfigError::invalid(path, inner),
            }
        })?;
        // Range checks happen once here so every loaded file is usable.
        file.to_scenario()?;
        Ok(file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Convert to library types, validating ranges.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let earth = EarthModel::new(self.earth.radius_m)
            .map_err(|e| ConfigError::invalid("earth.radius_m", e))?;
        let satellite = point(
            "satellite",
            self.satellite.lat_deg,
            self.satellite.lon_deg,
            self.satellite.alt_m,
        )?;
        if satellite.altitude() <= 0.0 {
            return Err(ConfigError::invalid("satellite.alt_m", "must be > 0"));
        }
        let ris = point("ris", self.ris.lat_deg, self.ris.lon_deg, self.ris.alt_m)?;
        let user = point(
            "user",
            self.user.lat_deg,
            self.user.lon_deg,
            self.user.alt_m,
        )?;

        let r = &self.radio;
        for (name, v) in [
            ("frequency_hz", r.frequency_hz),
            ("tx_power_w", r.tx_power_w),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(
                    format!("radio.{name}"),
                    format!("must be a positive number, got {v}"),
                ));
            }
        }
        let g = &r.gains_dbi;
        for (name, v) in [
            ("tx", g.tx),
            ("rx", g.rx),
            ("ris_in", g.ris_in),
            ("ris_out", g.ris_out),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(
                    format!("radio.gains_dbi.{name}"),
                    "must be finite",
                ));
            }
        }
        let radio = RadioConfig::new(
            r.frequency_hz,
            r.tx_power_w,
            Gains::from_dbi(g.tx, g.rx, g.ris_in, g.ris_out),
        )
        .map_err(|e| ConfigError::invalid("radio", e))?
        .with_excess_loss_db(r.excess_loss_db)
        .map_err(|e| ConfigError::invalid("radio.excess_loss_db", e))?;

        let surface = self.surface()?;
        let error = PhaseErrorModel::new(self.error.sigma_rad)
            .map_err(|e| ConfigError::invalid("error.sigma_rad", e))?;
        let mc = McConfig::new(self.mc.samples, self.mc.seed)
            .map_err(|e| ConfigError::invalid("mc.samples", e))?;
        let bfgs = BfgsConfig {
            tolerance: self.bfgs.tolerance,
            max_iterations: self.bfgs.max_iterations,
            multistart_count: self.bfgs.multistart,
            wolfe_c1: self.bfgs.wolfe_c1,
            wolfe_c2: self.bfgs.wolfe_c2,
            ..BfgsConfig::default()
        };
        bfgs.validate()
            .map_err(|e| ConfigError::invalid("bfgs", e))?;

        let scenario = Scenario {
            earth,
            satellite,
            ris,
            user,
            radio,
            surface,
            error,
            mc,
            bfgs,
        };
        scenario
            .distances()
            .map_err(|e| ConfigError::invalid("user", e))?;
        Ok(scenario)
    }

    fn surface(&self) -> Result<RisArray, ConfigError> {
        let passive = self.ris.passive;
        let elements = match &self.ris.elements {
            ElementsSpec::List(list) => {
                if list.is_empty() {
                    return Err(ConfigError::invalid("ris.elements", "must not be empty"));
                }
                list.iter()
                    .map(|e| RisElement {
                        gamma: e.gamma,
                        phase: e.phase_rad,
                    })
                    .collect()
            }
            ElementsSpec::Uniform(u) => {
                if u.count == 0 {
                    return Err(ConfigError::invalid("ris.elements.count", "must be >= 1"));
                }
                if u.coherent {
                    vec![
                        RisElement {
                            gamma: u.gamma,
                            phase: 0.0
                        };
                        u.count
                    ]
                } else {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(self.mc.seed.wrapping_add(SURFACE_PHASE_STREAM));
                    (0..u.count)
                        .map(|_| RisElement {
                            gamma: u.gamma,
                            phase: std::f64::consts::TAU * rng.random::<f64>(),
                        })
                        .collect()
                }
            }
        };
        RisArray::new(elements, passive).map_err(|e| ConfigError::invalid("ris.elements", e))
    }
}

fn point(
    section: &str,
    lat_deg: f64,
    lon_deg: f64,
    alt_m: f64,
) -> Result<GeodeticPoint, ConfigError> {
    if !(lat_deg.is_finite() && (-90.0..=90.0).contains(&lat_deg)) {
        return Err(ConfigError::invalid(
            format!("{section}.lat_deg"),
            format!("must be within [-90, 90], got {lat_deg}"),
        ));
    }
    if !lon_deg.is_finite() {
        return Err(ConfigError::invalid(
            format!("{section}.lon_deg"),
            "must be finite",
        ));
    }
    if !(alt_m.is_finite() && alt_m >= 0.0) {
        return Err(ConfigError::invalid(
            format!("{section}.alt_m"),
            format!("must be >= 0, got {alt_m}"),
        ));
    }
    GeodeticPoint::from_degrees(lat_deg, lon_deg, alt_m)
        .map_err(|e| ConfigError::invalid(section, e))
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}
