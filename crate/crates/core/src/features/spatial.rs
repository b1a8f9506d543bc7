//! Features from vector layers: nearest transmission line, nearest
//! speed-test tile, and administrative-zone membership.

use super::FeatError;
use crate::geodata::{
    haversine_distance, planar_segment_distance, GeoPoint, NetworkKind, OoklaTile, PolyLineSet,
    PolygonSet, Zone, LOCALITY_WINDOW_DEG, METERS_PER_DEGREE,
};

/// Distance from `p` to a segment, meters, valid at any range.
///
/// Segments inside the locality window use the exact tangent-plane
/// distance. Segments crossing the window edge are clipped to it first,
/// which preserves the true minimum whenever the nearest point lies inside
/// the window. Segments entirely beyond the window fall back to the
/// nearer endpoint's great-circle distance; at that range the value is an
/// estimate, but it exceeds the window radius and never beats an in-window
/// candidate.
fn segment_distance_windowed(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let w = LOCALITY_WINDOW_DEG;
    let in_window =
        |q: GeoPoint| (q.lon - p.lon).abs() <= w && (q.lat - p.lat).abs() <= w;
    if in_window(a) && in_window(b) {
        return planar_segment_distance(p, a, b);
    }
    if let Some((ca, cb)) = clip_to_box(a, b, p.lon - w, p.lon + w, p.lat - w, p.lat + w) {
        return planar_segment_distance(p, ca, cb);
    }
    haversine_distance(p, a).min(haversine_distance(p, b))
}

/// Liang-Barsky clip of segment a-b against an axis-aligned lon/lat box.
fn clip_to_box(
    a: GeoPoint,
    b: GeoPoint,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
) -> Option<(GeoPoint, GeoPoint)> {
    let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (den, num) in [
        (-dx, a.lon - xmin),
        (dx, xmax - a.lon),
        (-dy, a.lat - ymin),
        (dy, ymax - a.lat),
    ] {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let t = num / den;
        if den < 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    let at = |t: f64| GeoPoint {
        lon: a.lon + t * dx,
        lat: a.lat + t * dy,
    };
    Some((at(t0), at(t1)))
}

/// Smallest lat-only separation between `p` and the segment, in meters.
/// Great-circle distance can never undercut this, so it is a safe pruning
/// bound.
fn lat_gap_m(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let lo = a.lat.min(b.lat);
    let hi = a.lat.max(b.lat);
    let gap = if p.lat < lo {
        lo - p.lat
    } else if p.lat > hi {
        p.lat - hi
    } else {
        0.0
    };
    gap * METERS_PER_DEGREE
}

/// Distance in meters from `p` to the nearest polyline segment.
pub fn distance_to_nearest_line(p: GeoPoint, lines: &PolyLineSet) -> Result<f64, FeatError> {
    if lines.is_empty() {
        return Err(FeatError::EmptyLayer("transmission lines".to_string()));
    }
    let mut best = f64::INFINITY;
    for line in lines.lines() {
        for seg in line.windows(2) {
            if lat_gap_m(p, seg[0], seg[1]) > best {
                continue;
            }
            best = best.min(segment_distance_windowed(p, seg[0], seg[1]));
        }
    }
    Ok(best)
}

/// Measurements of the nearest tile of one network kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileFeatures {
    pub avg_d_kbps: f64,
    pub avg_u_kbps: f64,
    pub avg_lat_ms: f64,
    pub tests: f64,
    pub devices: f64,
    /// Great-circle distance to the tile center, meters.
    pub distance: f64,
}

/// Finds the tile of `kind` whose center is nearest to `p` (ties keep the
/// earliest tile in input order) and returns its measurements.
pub fn nearest_tile_features(
    p: GeoPoint,
    tiles: &[OoklaTile],
    kind: NetworkKind,
) -> Result<TileFeatures, FeatError> {
    let mut best: Option<(&OoklaTile, f64)> = None;
    for tile in tiles.iter().filter(|t| t.network_kind == kind) {
        let d = haversine_distance(p, tile.center);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((tile, d));
        }
    }
    let (tile, distance) =
        best.ok_or_else(|| FeatError::EmptyLayer(format!("ookla_{}", kind.as_str())))?;
    Ok(TileFeatures {
        avg_d_kbps: tile.avg_d_kbps,
        avg_u_kbps: tile.avg_u_kbps,
        avg_lat_ms: tile.avg_lat_ms,
        tests: tile.tests as f64,
        devices: tile.devices as f64,
        distance,
    })
}

fn point_on_segment_deg(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    let (ux, uy) = (b.lon - a.lon, b.lat - a.lat);
    let (vx, vy) = (p.lon - a.lon, p.lat - a.lat);
    let cross = ux * vy - uy * vx;
    if cross.abs() > 1e-12 {
        return false;
    }
    let dot = vx * ux + vy * uy;
    let len_sq = ux * ux + uy * uy;
    if len_sq == 0.0 {
        return vx == 0.0 && vy == 0.0;
    }
    (0.0..=len_sq).contains(&dot)
}

/// Even-odd membership across all rings of a zone: an odd number of ray
/// crossings means inside, so hole rings cancel the exterior. Boundary
/// points count as inside.
fn zone_contains(zone: &Zone, p: GeoPoint) -> bool {
    for ring in &zone.rings {
        for seg in ring.windows(2) {
            if point_on_segment_deg(p, seg[0], seg[1]) {
                return true;
            }
        }
    }
    let mut inside = false;
    for ring in &zone.rings {
        for seg in ring.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn zone_boundary_distance(zone: &Zone, p: GeoPoint) -> f64 {
    let mut best = f64::INFINITY;
    for ring in &zone.rings {
        for seg in ring.windows(2) {
            if lat_gap_m(p, seg[0], seg[1]) > best {
                continue;
            }
            best = best.min(segment_distance_windowed(p, seg[0], seg[1]));
        }
    }
    best
}

/// One-hot vector over zones, in zone order. The first zone containing `p`
/// wins; when none does, the zone with the nearest boundary is assigned.
pub fn admin_one_hot(p: GeoPoint, zones: &PolygonSet) -> Result<Vec<f64>, FeatError> {
    if zones.is_empty() {
        return Err(FeatError::EmptyLayer("admin zones".to_string()));
    }
    let mut hot = vec![0.0; zones.zones().len()];
    if let Some(i) = zones.zones().iter().position(|z| zone_contains(z, p)) {
        hot[i] = 1.0;
        return Ok(hot);
    }
    let nearest = zones
        .zones()
        .iter()
        .enumerate()
        .map(|(i, z)| (i, zone_boundary_distance(z, p)))
        .fold((0usize, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best })
        .0;
    hot[nearest] = 1.0;
    Ok(hot)
}
