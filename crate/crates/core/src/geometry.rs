//! Spherical-Earth geometry: geodetic positions, their Earth-centered
//! Cartesian images, and the three propagation distances of the
//! satellite / RIS / user triangle.
//!
//! All angles are radians. Altitudes are measured above a sphere of
//! configurable radius; there is no ellipsoid.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Mean Earth radius in meters.
pub const MEAN_EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A sphere standing in for the Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    radius: f64,
}

impl EarthModel {
    pub fn new(radius_m: f64) -> Result<Self> {
        ensure_positive("earth radius", radius_m)?;
        Ok(Self { radius: radius_m })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        Self {
            radius: MEAN_EARTH_RADIUS_M,
        }
    }
}

/// Latitude/longitude in radians plus altitude in meters above the sphere.
///
/// Longitude is normalized into `[-π, π]` on construction, so points that
/// differ by whole turns of longitude compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPoint {
    latitude: f64,
    longitude: f64,
    altitude: f64,
}

impl GeodeticPoint {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Result<Self> {
        ensure_finite("latitude", latitude)?;
        ensure_finite("longitude", longitude)?;
        ensure_non_negative("altitude", altitude)?;
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&latitude) {
            return Err(Error::OutOfRange {
                name: "latitude",
                value: latitude,
                expected: "within [-pi/2, pi/2]",
            });
        }
        Ok(Self {
            latitude,
            longitude: normalize_longitude(longitude),
            altitude,
        })
    }

    pub fn from_degrees(latitude_deg: f64, longitude_deg: f64, altitude: f64) -> Result<Self> {
        Self::new(
            latitude_deg.to_radians(),
            longitude_deg.to_radians(),
            altitude,
        )
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn with_altitude(self, altitude: f64) -> Result<Self> {
        Self::new(self.latitude, self.longitude, altitude)
    }
}

fn normalize_longitude(lon: f64) -> f64 {
    let wrapped = lon.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Earth-centered, Earth-fixed Cartesian vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        ensure_finite("x", x)?;
        ensure_finite("y", y)?;
        ensure_finite("z", z)?;
        Ok(Self { x, y, z })
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Cartesian image of a geodetic point on a sphere of radius `R`:
/// `(R + a)·(cos φ cos λ, cos φ sin λ, sin φ)`.
pub fn to_ecef(p: &GeodeticPoint, earth: &EarthModel) -> EcefVector {
    let r = earth.radius + p.altitude;
    let (sin_lat, cos_lat) = p.latitude.sin_cos();
    let (sin_lon, cos_lon) = p.longitude.sin_cos();
    EcefVector {
        x: r * cos_lat * cos_lon,
        y: r * cos_lat * sin_lon,
        z: r * sin_lat,
    }
}

pub fn euclidean_distance(a: &EcefVector, b: &EcefVector) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// The three link lengths of the satellite / RIS / user triangle, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathDistances {
    /// Satellite to user (direct path).
    pub sat_user: f64,
    /// Satellite to RIS.
    pub sat_ris: f64,
    /// RIS to user.
    pub ris_user: f64,
}

impl PathDistances {
    pub fn new(sat_user: f64, sat_ris: f64, ris_user: f64) -> Result<Self> {
        ensure_positive("satellite-user distance", sat_user)?;
        ensure_positive("satellite-RIS distance", sat_ris)?;
        ensure_positive("RIS-user distance", ris_user)?;
        Ok(Self {
            sat_user,
            sat_ris,
            ris_user,
        })
    }
}

/// Distances of the scenario triangle. Fails if any two points coincide or
/// if the satellite sits on the surface.
pub fn scenario_distances(
    sat: &GeodeticPoint,
    ris: &GeodeticPoint,
    user: &GeodeticPoint,
    earth: &EarthModel,
) -> Result<PathDistances> {
    if sat.altitude <= 0.0 {
        return Err(Error::OutOfRange {
            name: "satellite altitude",
            value: sat.altitude,
            expected: "must be > 0",
        });
    }
    let s = to_ecef(sat, earth);
    let r = to_ecef(ris, earth);
    let u = to_ecef(user, earth);

    let sat_user = euclidean_distance(&s, &u);
    let sat_ris = euclidean_distance(&s, &r);
    let ris_user = euclidean_distance(&r, &u);
    if sat_user <= 0.0 {
        return Err(Error::DegenerateGeometry("satellite and user coincide"));
    }
    if sat_ris <= 0.0 {
        return Err(Error::DegenerateGeometry("satellite and RIS coincide"));
    }
    if ris_user <= 0.0 {
        return Err(Error::DegenerateGeometry("RIS and user coincide"));
    }
    Ok(PathDistances {
        sat_user,
        sat_ris,
        ris_user,
    })
}

/// Initial great-circle bearing from `from` to `to`, clockwise from north.
/// Returns `None` when the two points share latitude and longitude.
pub fn initial_bearing(from: &GeodeticPoint, to: &GeodeticPoint) -> Option<f64> {
    let dlon = to.longitude - from.longitude;
    let y = dlon.sin() * to.latitude.cos();
    let x = from.latitude.cos() * to.latitude.sin()
        - from.latitude.sin() * to.latitude.cos() * dlon.cos();
    if x == 0.0 && y == 0.0 {
        None
    } else {
        Some(y.atan2(x))
    }
}

/// Point reached by travelling a central angle along the great circle that
/// leaves `origin` with the given bearing.
pub fn great_circle_destination(
    origin: &GeodeticPoint,
    bearing: f64,
    central_angle: f64,
    altitude: f64,
) -> Result<GeodeticPoint> {
    let (sin_lat, cos_lat) = origin.latitude.sin_cos();
    let (sin_c, cos_c) = central_angle.sin_cos();
    let lat2 = (sin_lat * cos_c + cos_lat * sin_c * bearing.cos())
        .clamp(-1.0, 1.0)
        .asin();
    let lon2 =
        origin.longitude + (bearing.sin() * sin_c * cos_lat).atan2(cos_c - sin_lat * lat2.sin());
    GeodeticPoint::new(lat2, lon2, altitude)
}

/// Place a point at straight-line distance `distance` from `origin`, heading
/// along the great circle towards `toward` and sitting at `altitude`.
///
/// Used to realize a prescribed RIS-user distance while keeping the user on
/// the bearing of its reference position. When `toward` shares the origin's
/// latitude and longitude the heading defaults to due east.
pub fn point_at_distance(
    origin: &GeodeticPoint,
    toward: &GeodeticPoint,
    distance: f64,
    altitude: f64,
    earth: &EarthModel,
) -> Result<GeodeticPoint> {
    ensure_positive("distance", distance)?;
    ensure_non_negative("altitude", altitude)?;
    let r1 = earth.radius + origin.altitude;
    let r2 = earth.radius + altitude;
    if distance < (r1 - r2).abs() || distance > r1 + r2 {
        return Err(Error::OutOfRange {
            name: "distance",
            value: distance,
            expected: "unreachable at the requested altitude",
        });
    }
    // Law of cosines in half-angle form, well conditioned for short chords.
    let dr = r1 - r2;
    let half_sin_sq = ((distance * distance - dr * dr) / (4.0 * r1 * r2)).clamp(0.0, 1.0);
    let central_angle = 2.0 * half_sin_sq.sqrt().asin();
    let bearing = initial_bearing(origin, toward).unwrap_or(FRAC_PI_2);
    great_circle_destination(origin, bearing, central_angle, altitude)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    const R: f64 = MEAN_EARTH_RADIUS_M;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn axis_aligned_points() {
        let earth = EarthModel::default();
        let v = to_ecef(&GeodeticPoint::new(0.0, 0.0, 0.0).unwrap(), &earth);
        assert_eq!((v.x, v.y, v.z), (R, 0.0, 0.0));

        let v = to_ecef(&GeodeticPoint::new(FRAC_PI_2, 0.0, 0.0).unwrap(), &earth);
        assert!(close(v.x, 0.0, 1e-9 * R) && close(v.y, 0.0, 1e-9 * R));
        assert_eq!(v.z, R);

        let v = to_ecef(&GeodeticPoint::new(0.0, FRAC_PI_2, 1000.0).unwrap(), &earth);
        assert!(close(v.x, 0.0, 1e-9 * R));
        assert_eq!(v.y, R + 1000.0);
        assert_eq!(v.z, 0.0);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(GeodeticPoint::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(GeodeticPoint::new(0.0, f64::INFINITY, 0.0).is_err());
        assert!(GeodeticPoint::new(1.6, 0.0, 0.0).is_err());
        assert!(GeodeticPoint::new(-1.6, 0.0, 0.0).is_err());
        assert!(GeodeticPoint::new(0.0, 0.0, -1.0).is_err());
        assert!(EarthModel::new(0.0).is_err());
        assert!(EarthModel::new(-5.0).is_err());
        assert!(EcefVector::new(0.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn longitude_is_normalized() {
        let p = GeodeticPoint::new(0.3, 3.0 * PI / 2.0, 0.0).unwrap();
        assert!(close(p.longitude(), -PI / 2.0, 1e-15));
        let q = GeodeticPoint::new(0.3, -PI / 2.0 - TAU, 0.0).unwrap();
        assert!(close(p.longitude(), q.longitude(), 1e-14));
    }

    #[test]
    fn simple_distances() {
        let o = EcefVector::new(0.0, 0.0, 0.0).unwrap();
        let p = EcefVector::new(3.0, 4.0, 0.0).unwrap();
        assert_eq!(euclidean_distance(&o, &o), 0.0);
        assert_eq!(euclidean_distance(&o, &p), 5.0);
        let a = EcefVector::new(R, 0.0, 0.0).unwrap();
        let b = EcefVector::new(-R, 0.0, 0.0).unwrap();
        assert_eq!(euclidean_distance(&a, &b), 2.0 * R);
    }

    #[test]
    fn radial_geometry_gives_altitude() {
        let earth = EarthModel::default();
        let h = 550_000.0;
        let sat = GeodeticPoint::new(0.4, 1.1, h).unwrap();
        let user = GeodeticPoint::new(0.4, 1.1, 0.0).unwrap();
        let ris = GeodeticPoint::new(0.4, 1.1001, 0.0).unwrap();
        let d = scenario_distances(&sat, &ris, &user, &earth).unwrap();
        assert!(close(d.sat_user, h, 1e-9 * h));
    }

    #[test]
    fn coincident_points_rejected() {
        let earth = EarthModel::default();
        let sat = GeodeticPoint::new(0.0, 0.0, 550_000.0).unwrap();
        let ris = GeodeticPoint::new(0.0, 0.01, 0.0).unwrap();
        let err = scenario_distances(&sat, &ris, &ris, &earth).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));

        let grounded = GeodeticPoint::new(0.0, 0.0, 0.0).unwrap();
        let user = GeodeticPoint::new(0.0, 0.02, 0.0).unwrap();
        assert!(scenario_distances(&grounded, &ris, &user, &earth).is_err());
    }

    // Frozen from a 50-digit mpmath evaluation of the same three ECEF pairs.
    #[test]
    fn reference_leo_distances() {
        let earth = EarthModel::default();
        let sat = GeodeticPoint::new(0.0, 0.0, 550_000.0).unwrap();
        let ris = GeodeticPoint::new(0.0, 0.01, 0.0).unwrap();
        let user = GeodeticPoint::new(0.0, 0.02, 0.0).unwrap();
        let d = scenario_distances(&sat, &ris, &user, &earth).unwrap();
        assert!(close(d.sat_user, 565_806.405_488_625_43, 1e-6));
        assert!(close(d.sat_ris, 553_993.982_237_514_9, 1e-6));
        assert!(close(d.ris_user, 63_709.734_541_998_49, 1e-6));
    }

    #[test]
    fn point_at_distance_hits_target_distance() {
        let earth = EarthModel::default();
        let ris = GeodeticPoint::new(0.2, 0.5, 10.0).unwrap();
        let toward = GeodeticPoint::new(0.21, 0.52, 0.0).unwrap();
        for &d in &[20.0, 250.0, 12_345.0, 400_000.0] {
            let p = point_at_distance(&ris, &toward, d, 0.0, &earth).unwrap();
            let got = euclidean_distance(&to_ecef(&ris, &earth), &to_ecef(&p, &earth));
            assert!(close(got, d, 1e-7 * d.max(1.0)), "{d} vs {got}");
        }
        // Moving away keeps the bearing: the target itself lies on the path.
        let d0 = euclidean_distance(&to_ecef(&ris, &earth), &to_ecef(&toward, &earth));
        let p = point_at_distance(&ris, &toward, d0, 0.0, &earth).unwrap();
        let miss = euclidean_distance(&to_ecef(&p, &earth), &to_ecef(&toward, &earth));
        assert!(miss < 1e-3, "missed target by {miss} m");

        assert!(point_at_distance(&ris, &toward, 5.0, 0.0, &earth).is_err());
    }
}
