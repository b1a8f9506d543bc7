//! Spherical distance math.
//!
//! The Earth model is a sphere of mean radius 6,371,008.8 m. Error against
//! an ellipsoid stays below 0.5%, which is immaterial at the kilometer
//! buffer scales this pipeline works with.

use super::{GeoError, GeoPoint};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Arc length of one degree along a meridian, in meters.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// Maximum angular offset (degrees, per axis) a segment endpoint may have
/// from the query point before the tangent-plane approximation in
/// [`point_segment_distance`] is rejected.
pub const LOCALITY_WINDOW_DEG: f64 = 5.0;

/// Great-circle distance between two points, in meters.
///
/// Symmetric and nonnegative; zero for identical points.
pub fn haversine_distance(p: GeoPoint, q: GeoPoint) -> f64 {
    let lat_p = p.lat.to_radians();
    let lat_q = q.lat.to_radians();
    let half_dlat = (q.lat - p.lat).to_radians() / 2.0;
    let half_dlon = (q.lon - p.lon).to_radians() / 2.0;
    let a = half_dlat.sin().powi(2) + lat_p.cos() * lat_q.cos() * half_dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Distance from `p` to the segment `a`-`b`, in meters.
///
/// Computed in a local equirectangular tangent plane centered at `p`
/// (x = delta-lon scaled by cos of `p`'s latitude, y = delta-lat, both in
/// meters). Both endpoints must lie within [`LOCALITY_WINDOW_DEG`] degrees
/// of `p` on each axis; beyond that the plane approximation degrades and
/// the call fails with [`GeoError::LocalityViolation`].
pub fn point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    for q in [a, b] {
        if (q.lon - p.lon).abs() > LOCALITY_WINDOW_DEG || (q.lat - p.lat).abs() > LOCALITY_WINDOW_DEG {
            return Err(GeoError::LocalityViolation {
                lon: q.lon,
                lat: q.lat,
                max_deg: LOCALITY_WINDOW_DEG,
            });
        }
    }
    Ok(planar_segment_distance(p, a, b))
}

/// Tangent-plane segment distance without the locality check.
///
/// Callers are responsible for keeping the geometry near `p`; the public
/// entry point is [`point_segment_distance`].
pub(crate) fn planar_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let cos_lat = p.lat.to_radians().cos();
    let ax = (a.lon - p.lon) * cos_lat * METERS_PER_DEGREE;
    let ay = (a.lat - p.lat) * METERS_PER_DEGREE;
    let bx = (b.lon - p.lon) * cos_lat * METERS_PER_DEGREE;
    let by = (b.lat - p.lat) * METERS_PER_DEGREE;

    let dx = bx - ax;
    let dy = by - ay;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return (ax * ax + ay * ay).sqrt();
    }
    // Projection of the origin (= p) onto the segment, clamped to it.
    let t = (-(ax * dx + ay * dy) / len_sq).clamp(0.0, 1.0);
    let nx = ax + t * dx;
    let ny = ay + t * dy;
    (nx * nx + ny * ny).sqrt()
}
