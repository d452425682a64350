//! Parameter sweeps over the RIS-user distance, the RIS phase and the
//! phase-error bound, emitted as CSV and JSON tables.
//!
//! Grid cells are independent and evaluated in parallel; collection keeps
//! grid order, so output is identical for any thread count.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::link_budget::{linear_to_db, LinkBudget};
use crate::optimizers::{
    draw_errors, maximize, mean_sample_power, optimal_phase_ideal, ClosedFormObjective,
    OptimizationResult, SampleAverage,
};
use crate::power_model::{
    expected_power_closed_form, received_power, sinc, PhaseErrorModel, SampleMode,
};
use crate::scenario::{DruCovariation, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    /// `count` linearly spaced points from `min` to `max` inclusive.
    pub fn linspace(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidAxis {
            axis: name.to_string(),
            reason: reason.to_string(),
        };
        if count < 2 {
            return Err(invalid("needs at least 2 points"));
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(invalid("bounds must be finite"));
        }
        if min >= max {
            return Err(invalid("min must be below max"));
        }
        let step = (max - min) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| min + step * i as f64).collect();
        values[count - 1] = max;
        Ok(Self {
            name: name.to_string(),
            values,
        })
    }

    /// An explicit, non-empty list of finite points.
    pub fn explicit(name: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidAxis {
                axis: name.to_string(),
                reason: "needs at least one finite value".into(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Watts,
    Radians,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub unit: Unit,
    pub values: Vec<f64>,
}

impl Series {
    fn new(name: &str, unit: Unit, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            unit,
            values,
        }
    }

    fn columns(&self) -> Vec<String> {
        match self.unit {
            Unit::Watts => vec![format!("{}_w", self.name), format!("{}_dbw", self.name)],
            Unit::Radians => vec![format!("{}_rad", self.name)],
            Unit::Dimensionless => vec![self.name.clone()],
        }
    }

    fn cells(&self, i: usize, out: &mut Vec<String>) {
        let v = self.values[i];
        out.push(v.to_string());
        if self.unit == Unit::Watts {
            out.push(linear_to_db(v).to_string());
        }
    }
}

/// A swept table: one or two axes, value series laid out row-major over the
/// axis grid (first axis outermost), and overlays indexed by the first axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: String,
    pub axes: Vec<Axis>,
    pub series: Vec<Series>,
    pub overlays: Vec<Series>,
    pub metadata: Map<String, Value>,
}

impl SweepResult {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn overlay(&self, name: &str) -> Option<&Series> {
        self.overlays.iter().find(|s| s.name == name)
    }

    /// Value of `series` at grid indices `(i, j)`; `j` is ignored for 1-D sweeps.
    pub fn value(&self, series: &str, i: usize, j: usize) -> Option<f64> {
        let s = self.series(series)?;
        let idx = if self.axes.len() == 2 {
            i * self.axes[1].len() + j
        } else {
            i
        };
        s.values.get(idx).copied()
    }

    /// CSV with a header row and one row per grid cell. Watt-valued series
    /// get an extra dBW column; overlays repeat along the inner axis.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        for s in self.series.iter().chain(&self.overlays) {
            header.extend(s.columns());
        }
        w.write_record(&header).map_err(io_error)?;

        let inner = if self.axes.len() == 2 {
            self.axes[1].len()
        } else {
            1
        };
        let mut row = Vec::with_capacity(header.len());
        for cell in 0..self.cell_count() {
            let (i, j) = (cell / inner, cell % inner);
            row.clear();
            row.push(self.axes[0].values[i].to_string());
            if self.axes.len() == 2 {
                row.push(self.axes[1].values[j].to_string());
            }
            for s in &self.series {
                s.cells(cell, &mut row);
            }
            for o in &self.overlays {
                o.cells(i, &mut row);
            }
            w.write_record(&row).map_err(io_error)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidConfig(format!("write failed: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("sweep results are always serializable")
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`, returning both paths.
    pub fn write_files(&self, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(&csv_path, buf)?;
        let mut text =
            serde_json::to_string_pretty(&self.to_json()).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&json_path, text)?;
        Ok((csv_path, json_path))
    }
}

fn io_error(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("CSV write failed: {e}"))
}

fn base_metadata(kind: &str, scenario: &Scenario) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("kind".into(), json!(kind));
    m.insert("seed".into(), json!(scenario.mc.seed));
    m.insert("sample_count".into(), json!(scenario.mc.sample_count));
    m.insert("sigma_rad".into(), json!(scenario.error.sigma()));
    m.insert("scenario".into(), json!(scenario));
    m
}

/// Evaluate `f` over every `(i, j)` cell of the grid, row-major.
fn grid<F>(outer: usize, inner: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    (0..outer * inner)
        .into_par_iter()
        .map(|cell| f(cell / inner, cell % inner))
        .collect()
}

fn budgets_along_distance(
    scenario: &Scenario,
    ris_user: &Axis,
    covariation: DruCovariation,
) -> Result<Vec<LinkBudget>> {
    ris_user
        .values
        .par_iter()
        .map(|&d| scenario.budget_at_ris_distance(d, covariation))
        .collect()
}

/// Received power over RIS-user distance × RIS phase, with the ideal
/// optimum phase (and the power it achieves) overlaid per distance.
pub fn sweep_power_surface(
    scenario: &Scenario,
    ris_user: &Axis,
    phase: &Axis,
    covariation: DruCovariation,
) -> Result<SweepResult> {
    let budgets = budgets_along_distance(scenario, ris_user, covariation)?;
    let power = grid(ris_user.len(), phase.len(), |i, j| {
        received_power(&budgets[i], phase.values[j])
    })?;
    let optimal: Vec<f64> = budgets.iter().map(optimal_phase_ideal).collect();
    let optimal_power = budgets
        .iter()
        .zip(&optimal)
        .map(|(b, &phi)| received_power(b, phi))
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = base_metadata("power_surface", scenario);
    metadata.insert("covariation".into(), json!(covariation));
    Ok(SweepResult {
        kind: "power_surface".into(),
        axes: vec![ris_user.clone(), phase.clone()],
        series: vec![Series::new("power", Unit::Watts, power)],
        overlays: vec![
            Series::new("optimal_phase", Unit::Radians, optimal),
            Series::new("optimal_power", Unit::Watts, optimal_power),
        ],
        metadata,
    })
}

/// Optimally phased received power against the direct-path-only power
/// along the RIS-user distance.
pub fn sweep_ris_vs_direct(
    scenario: &Scenario,
    ris_user: &Axis,
    covariation: DruCovariation,
) -> Result<SweepResult> {
    let budgets = budgets_along_distance(scenario, ris_user, covariation)?;
    let optimal: Vec<f64> = budgets.iter().map(optimal_phase_ideal).collect();
    let with_ris = budgets
        .iter()
        .zip(&optimal)
        .map(|(b, &phi)| received_power(b, phi))
        .collect::<Result<Vec<_>>>()?;
    let without_ris = budgets.iter().map(LinkBudget::direct_power).collect();

    let mut metadata = base_metadata("ris_vs_direct", scenario);
    metadata.insert("covariation".into(), json!(covariation));
    Ok(SweepResult {
        kind: "ris_vs_direct".into(),
        axes: vec![ris_user.clone()],
        series: vec![
            Series::new("with_ris", Unit::Watts, with_ris),
            Series::new("without_ris", Unit::Watts, without_ris),
        ],
        overlays: vec![Series::new("optimal_phase", Unit::Radians, optimal)],
        metadata,
    })
}

/// `sinc(σ)` over the error bound; optionally also `E[P_R]` at `φ_R = Θ`.
pub fn sweep_sinc(
    scenario: &Scenario,
    sigma: &Axis,
    with_expected_power: bool,
) -> Result<SweepResult> {
    let mut series = vec![Series::new(
        "sinc",
        Unit::Dimensionless,
        sigma.values.iter().map(|&s| sinc(s)).collect(),
    )];
    if with_expected_power {
        let budget = scenario.link_budget()?;
        let theta = optimal_phase_ideal(&budget);
        let values = sigma
            .values
            .iter()
            .map(|&s| expected_power_closed_form(&budget, theta, &PhaseErrorModel::new(s.abs())?))
            .collect::<Result<Vec<_>>>()?;
        series.push(Series::new("expected_power_at_offset", Unit::Watts, values));
    }
    Ok(SweepResult {
        kind: "sinc".into(),
        axes: vec![sigma.clone()],
        series,
        overlays: vec![],
        metadata: base_metadata("sinc", scenario),
    })
}

fn error_model(sigma: f64) -> Result<PhaseErrorModel> {
    PhaseErrorModel::new(sigma).map_err(|_| Error::InvalidAxis {
        axis: "sigma_rad".into(),
        reason: format!("error bound must be >= 0, got {sigma}"),
    })
}

/// Closed-form expected power over error bound × RIS phase.
pub fn sweep_expected_surface(
    scenario: &Scenario,
    sigma: &Axis,
    phase: &Axis,
) -> Result<SweepResult> {
    let budget = scenario.link_budget()?;
    let errs = sigma
        .values
        .iter()
        .map(|&s| error_model(s))
        .collect::<Result<Vec<_>>>()?;
    let values = grid(sigma.len(), phase.len(), |i, j| {
        expected_power_closed_form(&budget, phase.values[j], &errs[i])
    })?;
    Ok(SweepResult {
        kind: "expected_surface".into(),
        axes: vec![sigma.clone(), phase.clone()],
        series: vec![Series::new("expected_power", Unit::Watts, values)],
        overlays: vec![],
        metadata: base_metadata("expected_surface", scenario),
    })
}

/// Monte Carlo expected power against the RIS phase for each error bound,
/// with the BFGS optimum on the same frozen samples marked per curve.
pub fn sweep_expected_vs_phase(
    scenario: &Scenario,
    sigma: &Axis,
    phase: &Axis,
    mode: SampleMode,
) -> Result<SweepResult> {
    let budget = scenario.link_budget()?;
    let objectives = sigma
        .values
        .iter()
        .map(|&s| {
            let err = error_model(s)?;
            SampleAverage::new(budget, draw_errors(&err, &scenario.mc)?, err, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<PhaseErrorModel> = sigma
        .values
        .iter()
        .map(|&s| error_model(s))
        .collect::<Result<_>>()?;

    let values = grid(sigma.len(), phase.len(), |i, j| {
        mean_sample_power(
            &budget,
            phase.values[j],
            objectives[i].errors(),
            &errs[i],
            mode,
        )
    })?;
    let optima = objectives
        .par_iter()
        .map(|o| maximize(o, &scenario.bfgs))
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = base_metadata("expected_vs_phase", scenario);
    metadata.insert("mode".into(), json!(mode));
    Ok(SweepResult {
        kind: "expected_vs_phase".into(),
        axes: vec![sigma.clone(), phase.clone()],
        series: vec![Series::new("expected_power", Unit::Watts, values)],
        overlays: optimum_overlays(&optima),
        metadata,
    })
}

fn optimum_overlays(optima: &[OptimizationResult]) -> Vec<Series> {
    vec![
        Series::new(
            "optimal_phase",
            Unit::Radians,
            optima.iter().map(|r| r.optimal_phase).collect(),
        ),
        Series::new(
            "optimal_power",
            Unit::Watts,
            optima.iter().map(|r| r.objective_value).collect(),
        ),
        Series::new(
            "bfgs_iterations",
            Unit::Dimensionless,
            optima.iter().map(|r| r.iterations as f64).collect(),
        ),
    ]
}

/// Objective used when sweeping BFGS optima over the error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    ClosedForm,
    MonteCarlo(SampleMode),
}

/// Expected power at the BFGS optimum and at the iterate just before it,
/// per error bound. Iterate histories land in the metadata.
pub fn sweep_optimal_vs_suboptimal(
    scenario: &Scenario,
    sigma: &Axis,
    evaluation: Evaluation,
) -> Result<SweepResult> {
    let budget = scenario.link_budget()?;
    let optima = sigma
        .values
        .par_iter()
        .map(|&s| {
            let err = error_model(s)?;
            match evaluation {
                Evaluation::ClosedForm => {
                    maximize(&ClosedFormObjective::new(budget, &err), &scenario.bfgs)
                }
                Evaluation::MonteCarlo(mode) => {
                    let saa =
                        SampleAverage::new(budget, draw_errors(&err, &scenario.mc)?, err, mode)?;
                    maximize(&saa, &scenario.bfgs)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = base_metadata("optimal_vs_suboptimal", scenario);
    metadata.insert("evaluation".into(), json!(evaluation));
    metadata.insert(
        "histories".into(),
        json!(optima.iter().map(|r| &r.history).collect::<Vec<_>>()),
    );
    Ok(SweepResult {
        kind: "optimal_vs_suboptimal".into(),
        axes: vec![sigma.clone()],
        series: vec![
            Series::new(
                "optimal",
                Unit::Watts,
                optima.iter().map(|r| r.objective_value).collect(),
            ),
            Series::new(
                "suboptimal",
                Unit::Watts,
                optima
                    .iter()
                    .map(OptimizationResult::penultimate_objective)
                    .collect(),
            ),
            Series::new(
                "optimal_phase",
                Unit::Radians,
                optima.iter().map(|r| r.optimal_phase).collect(),
            ),
        ],
        overlays: vec![],
        metadata,
    })
}

/// One of the six sweep kinds with its axes.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    PowerSurface {
        ris_user: Axis,
        phase: Axis,
        covariation: DruCovariation,
    },
    RisVsDirect {
        ris_user: Axis,
        covariation: DruCovariation,
    },
    Sinc {
        sigma: Axis,
        with_expected_power: bool,
    },
    ExpectedSurface {
        sigma: Axis,
        phase: Axis,
    },
    ExpectedVsPhase {
        sigma: Axis,
        phase: Axis,
        mode: SampleMode,
    },
    OptimalVsSuboptimal {
        sigma: Axis,
        evaluation: Evaluation,
    },
}

pub const RIS_USER_AXIS: &str = "d_ru_m";
pub const PHASE_AXIS: &str = "phi_r_rad";
pub const SIGMA_AXIS: &str = "sigma_rad";

impl SweepSpec {
    /// Default axes for figure presets 2 through 7.
    pub fn preset(figure: u8, mode: SampleMode) -> Result<Self> {
        let phase = |n| Axis::linspace(PHASE_AXIS, 0.0, TAU, n);
        Ok(match figure {
            2 => SweepSpec::PowerSurface {
                ris_user: Axis::linspace(RIS_USER_AXIS, 10.0, 1000.0, 100)?,
                phase: phase(181)?,
                covariation: DruCovariation::Geometric,
            },
            3 => SweepSpec::RisVsDirect {
                ris_user: Axis::linspace(RIS_USER_AXIS, 10.0, 1000.0, 100)?,
                covariation: DruCovariation::Geometric,
            },
            4 => SweepSpec::Sinc {
                sigma: Axis::linspace(SIGMA_AXIS, 0.0, 10.0, 201)?,
                with_expected_power: false,
            },
            5 => SweepSpec::ExpectedSurface {
                sigma: Axis::linspace(SIGMA_AXIS, 0.0, std::f64::consts::PI, 61)?,
                phase: phase(121)?,
            },
            6 => SweepSpec::ExpectedVsPhase {
                sigma: Axis::explicit(SIGMA_AXIS, vec![0.0, 0.5, 1.0])?,
                phase: phase(361)?,
                mode,
            },
            7 => SweepSpec::OptimalVsSuboptimal {
                sigma: Axis::linspace(SIGMA_AXIS, 0.0, std::f64::consts::PI, 32)?,
                evaluation: Evaluation::MonteCarlo(mode),
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown figure {other} (expected 2..=7)"
                )))
            }
        })
    }

    pub fn run(&self, scenario: &Scenario) -> Result<SweepResult> {
        match self {
            SweepSpec::PowerSurface {
                ris_user,
                phase,
                covariation,
            } => sweep_power_surface(scenario, ris_user, phase, *covariation),
            SweepSpec::RisVsDirect {
                ris_user,
                covariation,
            } => sweep_ris_vs_direct(scenario, ris_user, *covariation),
            SweepSpec::Sinc {
                sigma,
                with_expected_power,
            } => sweep_sinc(scenario, sigma, *with_expected_power),
            SweepSpec::ExpectedSurface { sigma, phase } => {
                sweep_expected_surface(scenario, sigma, phase)
            }
            SweepSpec::ExpectedVsPhase { sigma, phase, mode } => {
                sweep_expected_vs_phase(scenario, sigma, phase, *mode)
            }
            SweepSpec::OptimalVsSuboptimal { sigma, evaluation } => {
                sweep_optimal_vs_suboptimal(scenario, sigma, *evaluation)
            }
        }
    }
}

/// Run `f` on a rayon pool capped at `threads` workers (0 = rayon's default).
pub fn with_thread_cap<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
