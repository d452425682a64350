//! Command-line front end: `budget`, `optimize` and `sweep`.
//!
//! Results go to stdout (or the sweep output directory), diagnostics to
//! stderr. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | computation failed |
//! | 2    | scenario file missing or unreadable |
//! | 3    | scenario file is not valid JSON |
//! | 4    | scenario or sweep parameters fail validation |
//! | 5    | `--strict` and the optimizer did not converge |
//! | 6    | output could not be written |
//! | 64   | command-line usage error |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{ConfigError, ScenarioFile};
use crate::experiments::{
    with_thread_cap, Axis, Evaluation, SweepSpec, PHASE_AXIS, RIS_USER_AXIS, SIGMA_AXIS,
};
use crate::link_budget::linear_to_db;
use crate::optimizers::{optimal_phase_ideal, optimize_stochastic, OptimizationResult};
use crate::power_model::{received_power, PhaseErrorModel, SampleMode};
use crate::scenario::{DruCovariation, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;
pub const EXIT_WRITE: i32 = 6;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping sweep worker threads (0 or unset = all cores).
pub const THREADS_ENV: &str = "RIS_LINKOPT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ris-linkopt",
    version,
    about = "RIS-assisted satellite link budgets and phase optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print distances, losses, amplitudes and phases of a scenario.
    Budget {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = BudgetFormat::Text)]
        output: BudgetFormat,
    },
    /// Find the RIS phase maximizing received power.
    #[command(group(ArgGroup::new("method").required(true).args(["ideal", "stochastic"])))]
    Optimize {
        scenario: PathBuf,
        /// Closed-form optimum of the error-free power.
        #[arg(long)]
        ideal: bool,
        /// Sample-average BFGS under uniform phase errors.
        #[arg(long)]
        stochastic: bool,
        #[arg(long, value_parser = parse_mode, default_value = "sampled")]
        mode: SampleMode,
        /// Override the scenario's phase-error bound (radians).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, default_value_t = OptimizeFormat::Json)]
        output: OptimizeFormat,
        /// Exit with status 5 if the optimizer does not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Run a parameter sweep and write `<name>.csv` and `<name>.json`.
    #[command(group(ArgGroup::new("what").required(true).args(["figure", "kind"])))]
    Sweep {
        scenario: PathBuf,
        /// Preset sweep, numbered 2 to 7.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=7))]
        figure: Option<u8>,
        /// Sweep kind with default axes; override them with the axis flags.
        #[arg(long, value_enum)]
        kind: Option<SweepKind>,
        /// RIS-user distance axis in metres, `MIN:MAX:N` or `a,b,c`.
        #[arg(long, value_parser = parse_axis_spec)]
        d_ru: Option<AxisSpec>,
        /// RIS phase axis in radians, `MIN:MAX:N` or `a,b,c`.
        #[arg(long, value_parser = parse_axis_spec)]
        phi: Option<AxisSpec>,
        /// Phase-error bound axis in radians, `MIN:MAX:N` or `a,b,c`.
        #[arg(long, value_parser = parse_axis_spec)]
        sigma: Option<AxisSpec>,
        #[arg(long, value_enum)]
        covariation: Option<Covariation>,
        #[arg(long, value_parser = parse_mode, default_value = "sampled")]
        mode: SampleMode,
        /// Include the expected power at the ideal phase in the sinc sweep.
        #[arg(long)]
        with_expected_power: bool,
        /// Maximize the closed-form expectation instead of a sample average.
        #[arg(long)]
        closed_form: bool,
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BudgetFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizeFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Covariation {
    Geometric,
    FixedDirect,
}

impl From<Covariation> for DruCovariation {
    fn from(c: Covariation) -> Self {
        match c {
            Covariation::Geometric => DruCovariation::Geometric,
            Covariation::FixedDirect => DruCovariation::FixedDirect,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    PowerSurface,
    RisVsDirect,
    Sinc,
    ExpectedSurface,
    ExpectedVsPhase,
    OptimalVsSuboptimal,
}

impl SweepKind {
    fn preset(self) -> u8 {
        match self {
            SweepKind::PowerSurface => 2,
            SweepKind::RisVsDirect => 3,
            SweepKind::Sinc => 4,
            SweepKind::ExpectedSurface => 5,
            SweepKind::ExpectedVsPhase => 6,
            SweepKind::OptimalVsSuboptimal => 7,
        }
    }

    fn stem(self) -> &'static str {
        match self {
            SweepKind::PowerSurface => "power_surface",
            SweepKind::RisVsDirect => "ris_vs_direct",
            SweepKind::Sinc => "sinc",
            SweepKind::ExpectedSurface => "expected_surface",
            SweepKind::ExpectedVsPhase => "expected_vs_phase",
            SweepKind::OptimalVsSuboptimal => "optimal_vs_suboptimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum AxisSpec {
    Linspace(f64, f64, usize),
    List(Vec<f64>),
}

impl AxisSpec {
    fn build(&self, name: &str) -> crate::Result<Axis> {
        match self {
            AxisSpec::Linspace(min, max, n) => Axis::linspace(name, *min, *max, *n),
            AxisSpec::List(values) => Axis::explicit(name, values.clone()),
        }
    }
}

fn parse_axis_spec(s: &str) -> Result<AxisSpec, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, n] = parts.as_slice() else {
            return Err("expected MIN:MAX:N".into());
        };
        let n = n
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("`{n}`: {e}"))?;
        Ok(AxisSpec::Linspace(num(min)?, num(max)?, n))
    } else {
        s.split(',')
            .map(num)
            .collect::<Result<Vec<_>, _>>()
            .map(AxisSpec::List)
    }
}

fn parse_mode(s: &str) -> Result<SampleMode, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Failure carrying the exit status it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io { .. } => EXIT_IO,
            ConfigError::Parse(_) => EXIT_PARSE,
            ConfigError::Validation { .. } => EXIT_INVALID,
        };
        Failure::new(code, e)
    }
}

fn compute(e: crate::Error) -> Failure {
    Failure::new(EXIT_FAILURE, e)
}

fn write_out(e: std::io::Error) -> Failure {
    Failure::new(EXIT_WRITE, format!("write failed: {e}"))
}

/// Parse `args` (program name first) and run; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    match command {
        Command::Budget { scenario, output } => {
            let (_, scenario) = load(&scenario)?;
            budget(&scenario, output, stdout)
        }
        Command::Optimize {
            scenario,
            ideal,
            stochastic: _,
            mode,
            sigma,
            output,
            strict,
        } => {
            let (_, mut scenario) = load(&scenario)?;
            if let Some(s) = sigma {
                scenario.error =
                    PhaseErrorModel::new(s).map_err(|e| Failure::new(EXIT_INVALID, e))?;
            }
            optimize(&scenario, ideal, mode, output, strict, stdout, stderr)
        }
        Command::Sweep {
            scenario,
            figure,
            kind,
            d_ru,
            phi,
            sigma,
            covariation,
            mode,
            with_expected_power,
            closed_form,
            output,
        } => {
            let (file, scenario) = load(&scenario)?;
            let (preset, stem) = match (figure, kind) {
                (Some(f), _) => (f, format!("figure{f}")),
                (None, Some(k)) => (k.preset(), k.stem().to_string()),
                (None, None) => unreachable!("clap requires --figure or --kind"),
            };
            let mut spec =
                SweepSpec::preset(preset, mode).map_err(|e| Failure::new(EXIT_USAGE, e))?;
            let overrides = Overrides {
                d_ru,
                phi,
                sigma,
                covariation: covariation.map(Into::into),
                with_expected_power,
                closed_form,
            };
            overrides.apply(&mut spec)?;
            let threads = thread_cap()?;

            let mut result = with_thread_cap(threads, || spec.run(&scenario))
                .and_then(|r| r)
                .map_err(compute)?;
            if let Some(f) = figure {
                result.metadata.insert("figure".into(), json!(f));
            }
            result.metadata.insert(
                "scenario_file".into(),
                serde_json::to_value(&file).expect("serializable"),
            );

            std::fs::create_dir_all(&output).map_err(write_out)?;
            let (csv_path, json_path) = result.write_files(&output, &stem).map_err(write_out)?;
            writeln!(stdout, "{}", csv_path.display()).map_err(write_out)?;
            writeln!(stdout, "{}", json_path.display()).map_err(write_out)?;
            Ok(EXIT_OK)
        }
    }
}

fn load(path: &Path) -> Result<(ScenarioFile, Scenario), Failure> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.to_scenario()?;
    Ok((file, scenario))
}

fn thread_cap() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::new(
                EXIT_USAGE,
                format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"),
            )
        }),
    }
}

struct Overrides {
    d_ru: Option<AxisSpec>,
    phi: Option<AxisSpec>,
    sigma: Option<AxisSpec>,
    covariation: Option<DruCovariation>,
    with_expected_power: bool,
    closed_form: bool,
}

impl Overrides {
    fn apply(self, spec: &mut SweepSpec) -> Result<(), Failure> {
        let unused =
            |flag: &str| Failure::new(EXIT_USAGE, format!("{flag} does not apply to this sweep"));
        if self.with_expected_power && !matches!(spec, SweepSpec::Sinc { .. }) {
            return Err(unused("--with-expected-power"));
        }
        if self.closed_form && !matches!(spec, SweepSpec::OptimalVsSuboptimal { .. }) {
            return Err(unused("--closed-form"));
        }

        let (ru_slot, phase_slot, sigma_slot, cov_slot) = match spec {
            SweepSpec::PowerSurface {
                ris_user,
                phase,
                covariation,
            } => (Some(ris_user), Some(phase), None, Some(covariation)),
            SweepSpec::RisVsDirect {
                ris_user,
                covariation,
            } => (Some(ris_user), None, None, Some(covariation)),
            SweepSpec::Sinc {
                sigma,
                with_expected_power,
            } => {
                *with_expected_power |= self.with_expected_power;
                (None, None, Some(sigma), None)
            }
            SweepSpec::ExpectedSurface { sigma, phase }
            | SweepSpec::ExpectedVsPhase { sigma, phase, .. } => {
                (None, Some(phase), Some(sigma), None)
            }
            SweepSpec::OptimalVsSuboptimal { sigma, evaluation } => {
                if self.closed_form {
                    *evaluation = Evaluation::ClosedForm;
                }
                (None, None, Some(sigma), None)
            }
        };
        for (given, slot, name, flag) in [
            (&self.d_ru, ru_slot, RIS_USER_AXIS, "--d-ru"),
            (&self.phi, phase_slot, PHASE_AXIS, "--phi"),
            (&self.sigma, sigma_slot, SIGMA_AXIS, "--sigma"),
        ] {
            match (given, slot) {
                (Some(a), Some(slot)) => {
                    *slot = a.build(name).map_err(|e| Failure::new(EXIT_INVALID, e))?
                }
                (Some(_), None) => return Err(unused(flag)),
                _ => {}
            }
        }
        match (self.covariation, cov_slot) {
            (Some(c), Some(slot)) => *slot = c,
            (Some(_), None) => return Err(unused("--covariation")),
            _ => {}
        }
        Ok(())
    }
}

fn budget(scenario: &Scenario, format: BudgetFormat, out: &mut dyn Write) -> Result<i32, Failure> {
    let b = scenario.link_budget().map_err(compute)?;
    let agg = scenario.aggregate();
    let p = b.paths.expect("scenario budgets carry path terms");
    let peak = (b.amplitude_direct + b.amplitude_reflected).powi(2);
    let rows: Vec<(&str, f64)> = vec![
        ("d_su_m", p.distances.sat_user),
        ("d_sr_m", p.distances.sat_ris),
        ("d_ru_m", p.distances.ris_user),
        ("wavelength_m", p.wavelength),
        ("l_su_db", linear_to_db(p.loss_sat_user)),
        ("l_sr_db", linear_to_db(p.loss_sat_ris)),
        ("l_ru_db", linear_to_db(p.loss_ris_user)),
        ("a_su", b.amplitude_direct),
        ("a_ru", b.amplitude_reflected),
        ("phi_su_rad", p.phase_sat_user),
        ("phi_sr_rad", p.phase_sat_ris),
        ("phi_ru_rad", p.phase_ris_user),
        ("theta_rad", b.phase_offset),
        ("theta_wrapped_rad", b.wrapped_offset()),
        ("ris_magnitude", agg.magnitude),
        ("ris_phase_rad", agg.phase),
        ("direct_power_w", b.direct_power()),
        ("direct_power_dbw", linear_to_db(b.direct_power())),
        ("peak_power_w", peak),
        ("peak_power_dbw", linear_to_db(peak)),
    ];
    match format {
        BudgetFormat::Text => {
            for (k, v) in &rows {
                writeln!(out, "{k:<18} {v}").map_err(write_out)?;
            }
        }
        BudgetFormat::Json => {
            let map: serde_json::Map<String, Value> = rows
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            print_json(out, &Value::Object(map))?;
        }
    }
    Ok(EXIT_OK)
}

fn print_json(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    writeln!(out, "{text}").map_err(write_out)
}

fn optimize(
    scenario: &Scenario,
    ideal: bool,
    mode: SampleMode,
    format: OptimizeFormat,
    strict: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let b = scenario.link_budget().map_err(compute)?;
    if ideal {
        let phase = optimal_phase_ideal(&b);
        let power = received_power(&b, phase).map_err(compute)?;
        match format {
            OptimizeFormat::Json => print_json(
                out,
                &json!({
                    "method": "ideal",
                    "optimal_phase_rad": phase,
                    "power_w": power,
                    "power_dbw": linear_to_db(power),
                }),
            )?,
            OptimizeFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["method", "optimal_phase_rad", "power_w", "power_dbw"])
                    .map_err(csv_out)?;
                w.write_record([
                    "ideal".to_string(),
                    phase.to_string(),
                    power.to_string(),
                    linear_to_db(power).to_string(),
                ])
                .map_err(csv_out)?;
                out.write_all(&w.into_inner().map_err(|e| write_out(e.into_error()))?)
                    .map_err(write_out)?;
            }
        }
        return Ok(EXIT_OK);
    }

    let r = optimize_stochastic(&b, &scenario.error, &scenario.mc, &scenario.bfgs, mode)
        .map_err(compute)?;
    match format {
        OptimizeFormat::Json => print_json(
            out,
            &json!({
                "method": "stochastic",
                "mode": mode,
                "sigma_rad": scenario.error.sigma(),
                "sample_count": scenario.mc.sample_count,
                "seed": scenario.mc.seed,
                "objective_dbw": linear_to_db(r.objective_value),
                "result": r,
            }),
        )?,
        OptimizeFormat::Csv => write_result_csv(out, mode, scenario, &r)?,
    }
    if strict && !r.converged {
        let _ = writeln!(
            err,
            "error: optimizer stopped without converging ({:?})",
            r.stop_reason
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

fn csv_out(e: csv::Error) -> Failure {
    Failure::new(EXIT_WRITE, format!("write failed: {e}"))
}

fn write_result_csv(
    out: &mut dyn Write,
    mode: SampleMode,
    scenario: &Scenario,
    r: &OptimizationResult,
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "mode",
        "sigma_rad",
        "optimal_phase_rad",
        "objective_w",
        "objective_dbw",
        "iterations",
        "converged",
        "final_gradient_norm",
        "stop_reason",
    ])
    .map_err(csv_out)?;
    let stop = serde_json::to_value(r.stop_reason).expect("serializable");
    w.write_record([
        "stochastic".to_string(),
        mode.to_string(),
        scenario.error.sigma().to_string(),
        r.optimal_phase.to_string(),
        r.objective_value.to_string(),
        linear_to_db(r.objective_value).to_string(),
        r.iterations.to_string(),
        r.converged.to_string(),
        r.final_gradient_norm.to_string(),
        stop.as_str().unwrap_or_default().to_string(),
    ])
    .map_err(csv_out)?;
    out.write_all(&w.into_inner().map_err(|e| write_out(e.into_error()))?)
        .map_err(write_out)
}
