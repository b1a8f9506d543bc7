//! GeoJSON vector layers.
//!
//! Three layer shapes are understood, distinguished by the geometry type of
//! the features in the collection: `LineString` collections become a
//! [`PolyLineSet`] (transmission grid), `Polygon` collections become a
//! [`PolygonSet`] (administrative zones, keyed by a `zone_id` property), and
//! `Point` collections become Ookla speed-test tiles represented by their
//! centers.

use std::fs;
use std::path::Path;

use serde_json::Value;

use super::{GeoError, GeoPoint};

/// A set of polylines; every line has at least two vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyLineSet {
    lines: Vec<Vec<GeoPoint>>,
}

impl PolyLineSet {
    pub fn new(lines: Vec<Vec<GeoPoint>>) -> Result<Self, GeoError> {
        for (i, line) in lines.iter().enumerate() {
            if line.len() < 2 {
                return Err(GeoError::parse(
                    "<polyline set>",
                    0,
                    format!("polyline {i} has {} vertices, need at least 2", line.len()),
                ));
            }
        }
        Ok(Self { lines })
    }

    pub fn lines(&self) -> &[Vec<GeoPoint>] {
        &self.lines
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// One administrative zone: an exterior ring plus optional hole rings.
/// Every ring is closed (first vertex repeated at the end).
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub rings: Vec<Vec<GeoPoint>>,
}

/// Administrative zones with unique ids, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonSet {
    zones: Vec<Zone>,
}

impl PolygonSet {
    pub fn new(zones: Vec<Zone>) -> Result<Self, GeoError> {
        for zone in &zones {
            if zone.rings.is_empty() {
                return Err(GeoError::parse("<polygon set>", 0, format!("zone '{}' has no rings", zone.id)));
            }
            for ring in &zone.rings {
                if ring.len() < 4 || ring.first() != ring.last() {
                    return Err(GeoError::parse(
                        "<polygon set>",
                        0,
                        format!("zone '{}' has an unclosed or degenerate ring", zone.id),
                    ));
                }
            }
        }
        for (i, zone) in zones.iter().enumerate() {
            if zones[..i].iter().any(|z| z.id == zone.id) {
                return Err(GeoError::parse("<polygon set>", 0, format!("duplicate zone_id '{}'", zone.id)));
            }
        }
        Ok(Self { zones })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }
}

/// Network type of an Ookla tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Mobile,
    Fixed,
}

impl NetworkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Mobile => "mobile",
            NetworkKind::Fixed => "fixed",
        }
    }
}

/// An Ookla speed-test tile, reduced to its center point. All measures are
/// nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct OoklaTile {
    pub center: GeoPoint,
    pub network_kind: NetworkKind,
    pub avg_d_kbps: f64,
    pub avg_u_kbps: f64,
    pub avg_lat_ms: f64,
    pub tests: u64,
    pub devices: u64,
}

/// Result of [`parse_geojson`]: one of the three supported layer shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorData {
    Lines(PolyLineSet),
    Zones(PolygonSet),
    Tiles(Vec<OoklaTile>),
}

pub fn parse_geojson(path: impl AsRef<Path>) -> Result<VectorData, GeoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GeoError::io(path.display().to_string(), e))?;
    geojson_from_str(&text, &path.display().to_string())
}

pub(crate) fn geojson_from_str(text: &str, origin: &str) -> Result<VectorData, GeoError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| GeoError::parse(origin, e.line(), e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoError::parse(origin, 0, "expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| GeoError::parse(origin, 0, "FeatureCollection has no 'features' array"))?;
    if features.is_empty() {
        return Err(GeoError::parse(origin, 0, "FeatureCollection is empty"));
    }

    let geom_type = |f: &Value| -> Option<String> {
        f.get("geometry")?.get("type")?.as_str().map(str::to_string)
    };
    let first = geom_type(&features[0])
        .ok_or_else(|| GeoError::parse(origin, 0, "feature 0 has no geometry type"))?;
    for (i, f) in features.iter().enumerate() {
        if geom_type(f).as_deref() != Some(&first) {
            return Err(GeoError::parse(
                origin,
                0,
                format!("feature {i} has a different geometry type than feature 0 ({first})"),
            ));
        }
    }

    match first.as_str() {
        "LineString" => {
            let mut lines = Vec::with_capacity(features.len());
            for (i, f) in features.iter().enumerate() {
                lines.push(positions(coords(f, origin, i)?, origin, i)?);
            }
            PolyLineSet::new(lines).map(VectorData::Lines)
        }
        "Polygon" => {
            let mut zones = Vec::with_capacity(features.len());
            for (i, f) in features.iter().enumerate() {
                let id = property(f, "zone_id", origin, i)?
                    .as_str()
                    .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {i}: zone_id must be a string")))?
                    .to_string();
                let mut rings = Vec::new();
                for ring in coords(f, origin, i)?
                    .as_array()
                    .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {i}: polygon coordinates must be an array of rings")))?
                {
                    rings.push(positions(ring, origin, i)?);
                }
                zones.push(Zone { id, rings });
            }
            PolygonSet::new(zones).map(VectorData::Zones)
        }
        "Point" => {
            let mut tiles = Vec::with_capacity(features.len());
            for (i, f) in features.iter().enumerate() {
                tiles.push(tile_from_feature(f, origin, i)?);
            }
            Ok(VectorData::Tiles(tiles))
        }
        other => Err(GeoError::parse(origin, 0, format!("unsupported geometry type '{other}'"))),
    }
}

fn coords<'a>(feature: &'a Value, origin: &str, idx: usize) -> Result<&'a Value, GeoError> {
    feature
        .get("geometry")
        .and_then(|g| g.get("coordinates"))
        .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx} has no coordinates")))
}

fn positions(value: &Value, origin: &str, idx: usize) -> Result<Vec<GeoPoint>, GeoError> {
    let arr = value
        .as_array()
        .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx}: coordinates must be an array")))?;
    let mut points = Vec::with_capacity(arr.len());
    for pos in arr {
        points.push(position(pos, origin, idx)?);
    }
    Ok(points)
}

fn position(value: &Value, origin: &str, idx: usize) -> Result<GeoPoint, GeoError> {
    let pair = value
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx}: position must be [lon, lat]")))?;
    let lon = pair[0]
        .as_f64()
        .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx}: non-numeric longitude")))?;
    let lat = pair[1]
        .as_f64()
        .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx}: non-numeric latitude")))?;
    GeoPoint::new(lon, lat)
}

fn property<'a>(feature: &'a Value, name: &str, origin: &str, idx: usize) -> Result<&'a Value, GeoError> {
    feature
        .get("properties")
        .and_then(|p| p.get(name))
        .filter(|v| !v.is_null())
        .ok_or_else(|| {
            let _ = (origin, idx);
            GeoError::MissingColumn(name.to_string())
        })
}

fn tile_from_feature(feature: &Value, origin: &str, idx: usize) -> Result<OoklaTile, GeoError> {
    let center = position(coords(feature, origin, idx)?, origin, idx)?;
    let kind = match property(feature, "kind", origin, idx)?.as_str() {
        Some("mobile") => NetworkKind::Mobile,
        Some("fixed") => NetworkKind::Fixed,
        other => {
            return Err(GeoError::parse(
                origin,
                0,
                format!("feature {idx}: kind must be 'mobile' or 'fixed', found {other:?}"),
            ))
        }
    };
    let measure = |name: &str| -> Result<f64, GeoError> {
        let v = property(feature, name, origin, idx)?
            .as_f64()
            .ok_or_else(|| GeoError::parse(origin, 0, format!("feature {idx}: '{name}' must be numeric")))?;
        if v < 0.0 || !v.is_finite() {
            return Err(GeoError::parse(origin, 0, format!("feature {idx}: '{name}' must be nonnegative, found {v}")));
        }
        Ok(v)
    };
    let count = |name: &str| -> Result<u64, GeoError> {
        let v = measure(name)?;
        if v.fract() != 0.0 {
            return Err(GeoError::parse(origin, 0, format!("feature {idx}: '{name}' must be an integer count, found {v}")));
        }
        Ok(v as u64)
    };
    Ok(OoklaTile {
        center,
        network_kind: kind,
        avg_d_kbps: measure("avg_d_kbps")?,
        avg_u_kbps: measure("avg_u_kbps")?,
        avg_lat_ms: measure("avg_lat_ms")?,
        tests: count("tests")?,
        devices: count("devices")?,
    })
}
