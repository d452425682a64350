#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use ris_linkopt::geometry::{great_circle_destination, EarthModel, GeodeticPoint};
use ris_linkopt::link_budget::{Gains, LinkBudget, RadioConfig, RisArray};
use ris_linkopt::optimizers::{BfgsConfig, McConfig};
use ris_linkopt::power_model::PhaseErrorModel;
use ris_linkopt::Scenario;

pub fn random_point<R: Rng>(rng: &mut R, max_alt: f64) -> GeodeticPoint {
    GeodeticPoint::new(
        rng.random_range(-FRAC_PI_2..=FRAC_PI_2),
        rng.random_range(-PI..PI),
        rng.random_range(0.0..=max_alt),
    )
    .unwrap()
}

/// A random LEO geometry with the user 10 m to 2 km from the RIS. The RIS
/// path is kept at least 1e-3 of the direct amplitude so that the peak of
/// the received power is resolvable in double precision.
pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let earth = EarthModel::default();
    loop {
        let ris = GeodeticPoint::from_degrees(
            rng.random_range(-60.0..60.0),
            rng.random_range(-180.0..180.0),
            rng.random_range(0.0..30.0),
        )
        .unwrap();
        let satellite = GeodeticPoint::new(
            ris.latitude() + rng.random_range(-0.08..0.08),
            ris.longitude() + rng.random_range(-0.08..0.08),
            rng.random_range(400e3..1200e3),
        )
        .unwrap();
        let d_ru = rng.random_range(10.0..2000.0);
        let angle = d_ru / earth.radius();
        let user = great_circle_destination(&ris, rng.random_range(0.0..TAU), angle, 0.0).unwrap();
        let radio = RadioConfig::new(
            rng.random_range(1e9..30e9),
            rng.random_range(1.0..100.0),
            Gains::from_dbi(
                rng.random_range(20.0..40.0),
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..10.0),
            ),
        )
        .unwrap()
        .with_excess_loss_db(rng.random_range(0.0..10.0))
        .unwrap();
        let count = rng.random_range(16..=1024);
        let surface = RisArray::uniform(count, rng.random_range(0.5..=1.0), 0.0, true).unwrap();
        let s = Scenario {
            earth,
            satellite,
            ris,
            user,
            radio,
            surface,
            error: PhaseErrorModel::error_free(),
            mc: McConfig::default(),
            bfgs: BfgsConfig::default(),
        };
        if let Ok(b) = s.link_budget() {
            if b.amplitude_reflected >= 1e-3 * b.amplitude_direct {
                return s;
            }
        }
    }
}

/// Bare budget with O(1) amplitudes and an offset anywhere up to 1e7 rad.
pub fn random_budget<R: Rng>(rng: &mut R) -> LinkBudget {
    LinkBudget::from_amplitudes(
        rng.random_range(0.2..2.0),
        rng.random_range(0.0..2.0),
        rng.random_range(-1e7..1e7),
    )
    .unwrap()
}

/// Grid argmax of `f` over `n` equispaced phases in `[0, 2π)`.
pub fn grid_argmax(n: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..n {
        let phi = TAU * i as f64 / n as f64;
        let v = f(phi);
        if v > best.1 {
            best = (phi, v);
        }
    }
    best
}

pub fn mean_and_stderr(samples: impl ExactSizeIterator<Item = f64>) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let values: Vec<f64> = samples.collect();
    for &v in &values {
        sum += v;
    }
    let mean = sum / n;
    for &v in &values {
        sum_sq += (v - mean) * (v - mean);
    }
    (mean, (sum_sq / (n - 1.0)).sqrt() / n.sqrt())
}
