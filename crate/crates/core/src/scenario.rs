//! A complete physical configuration and the link budgets it yields,
//! including budgets with the user relocated to a prescribed RIS distance.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    point_at_distance, scenario_distances, EarthModel, GeodeticPoint, PathDistances,
};
use crate::link_budget::{
    aggregate_reflection, build_link_budget, AggregateReflection, Gains, LinkBudget, RadioConfig,
    RisArray,
};
use crate::optimizers::{BfgsConfig, McConfig};
use crate::power_model::PhaseErrorModel;

/// How the direct path reacts when the RIS-user distance is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DruCovariation {
    /// The user moves along the great circle away from the RIS and the
    /// satellite-user distance follows from the new position.
    #[default]
    Geometric,
    /// The user moves as above but the satellite-user distance is pinned to
    /// its reference value.
    FixedDirect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub earth: EarthModel,
    pub satellite: GeodeticPoint,
    pub ris: GeodeticPoint,
    pub user: GeodeticPoint,
    pub radio: RadioConfig,
    pub surface: RisArray,
    pub error: PhaseErrorModel,
    pub mc: McConfig,
    pub bfgs: BfgsConfig,
}

impl Scenario {
    /// LEO pass used throughout the tests and presets: satellite 550 km over
    /// (0, 0), RIS at longitude 0.01 rad, user at 0.02 rad, 2 GHz carrier,
    /// 100 coherent passive elements.
    pub fn reference_leo() -> Self {
        let radio = RadioConfig::new(2e9, 10.0, Gains::from_dbi(30.0, 0.0, 5.0, 5.0))
            .and_then(|r| r.with_excess_loss_db(3.0))
            .expect("valid reference radio");
        Self {
            earth: EarthModel::default(),
            satellite: GeodeticPoint::new(0.0, 0.0, 550_000.0).expect("valid"),
            ris: GeodeticPoint::new(0.0, 0.01, 0.0).expect("valid"),
            user: GeodeticPoint::new(0.0, 0.02, 0.0).expect("valid"),
            radio,
            surface: RisArray::uniform(100, 1.0, 0.0, true).expect("valid"),
            error: PhaseErrorModel::new(0.5).expect("valid"),
            mc: McConfig::default(),
            bfgs: BfgsConfig::default(),
        }
    }

    pub fn distances(&self) -> Result<PathDistances> {
        scenario_distances(&self.satellite, &self.ris, &self.user, &self.earth)
    }

    pub fn aggregate(&self) -> AggregateReflection {
        aggregate_reflection(&self.surface)
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        build_link_budget(&self.distances()?, &self.radio, self.aggregate().magnitude)
    }

    /// Budget with the user moved to straight-line distance `ris_user` from
    /// the RIS, heading towards the reference user position.
    pub fn budget_at_ris_distance(
        &self,
        ris_user: f64,
        covariation: DruCovariation,
    ) -> Result<LinkBudget> {
        let user = point_at_distance(
            &self.ris,
            &self.user,
            ris_user,
            self.user.altitude(),
            &self.earth,
        )?;
        let mut distances = scenario_distances(&self.satellite, &self.ris, &user, &self.earth)?;
        if covariation == DruCovariation::FixedDirect {
            distances.sat_user = self.distances()?.sat_user;
        }
        build_link_budget(&distances, &self.radio, self.aggregate().magnitude)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Every field recomputed at 50 digits from the same formulas.
    #[test]
    fn reference_budget_matches_independent_evaluation() {
        let b = Scenario::reference_leo().link_budget().unwrap();
        let p = b.paths.unwrap();
        assert!(rel(p.wavelength, 0.149_896_229) < 1e-15);
        assert!(rel(p.loss_sat_user, 4_489_252_499_237_558.6) < 1e-12);
        assert!(rel(p.loss_sat_ris, 2_156_991_372_254_131.1) < 1e-12);
        assert!(rel(p.loss_ris_user, 28_526_592_910_856.18) < 1e-12);
        assert!(rel(b.amplitude_direct, 1.492_495_338_757_419_9e-6) < 1e-12);
        assert!(rel(b.amplitude_reflected, 1.274_825_798_730_253_5e-10) < 1e-12);
        assert!(rel(p.phase_sat_user, 23_716_850.766_634_207) < 1e-13);
        assert!(rel(p.phase_sat_ris, 23_221_710.597_273_681) < 1e-13);
        assert!(rel(p.phase_ris_user, 2_670_514.599_794_212_9) < 1e-13);
        assert!(rel(b.phase_offset, -2_175_374.430_433_687) < 1e-12);
        assert!((b.wrapped_offset() - 2.552_988_643_752_548).abs() < 1e-6);
    }

    #[test]
    fn relocated_user_has_requested_distance() {
        let s = Scenario::reference_leo();
        let base = s.distances().unwrap();
        for d in [50.0, 500.0, 5000.0] {
            let g = s
                .budget_at_ris_distance(d, DruCovariation::Geometric)
                .unwrap();
            let f = s
                .budget_at_ris_distance(d, DruCovariation::FixedDirect)
                .unwrap();
            let gd = g.paths.unwrap().distances;
            let fd = f.paths.unwrap().distances;
            assert!(rel(gd.ris_user, d) < 1e-6);
            assert_eq!(fd.sat_user, base.sat_user);
            assert_ne!(gd.sat_user, base.sat_user);
            assert_eq!(gd.sat_ris, base.sat_ris);
        }
    }
}
