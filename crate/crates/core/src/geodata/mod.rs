//! Core geospatial types and parsers for the external data formats.
//!
//! All coordinates are WGS84 longitude/latitude in degrees; distances are
//! meters on a spherical Earth (see [`distance::EARTH_RADIUS_M`]). Types are
//! immutable after construction and safe to share across threads.

mod distance;
mod raster;
mod schools;
mod vector;

pub use distance::{
    haversine_distance, point_segment_distance, EARTH_RADIUS_M, LOCALITY_WINDOW_DEG, METERS_PER_DEGREE,
};
pub(crate) use distance::planar_segment_distance;
pub use raster::{parse_raster, write_raster, RasterKind, RasterLayer};
pub use schools::{parse_schools_csv, write_schools_csv};
pub use vector::{parse_geojson, NetworkKind, OoklaTile, PolyLineSet, PolygonSet, VectorData, Zone};

use serde::{Deserialize, Serialize};

/// Errors raised by geodata types and parsers.
#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("invalid coordinate: lon {lon}, lat {lat}")]
    InvalidCoordinate { lon: f64, lat: f64 },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("raster holds {found} values but header declares {ncols} x {nrows} = {expected}")]
    DimensionMismatch {
        ncols: usize,
        nrows: usize,
        expected: usize,
        found: usize,
    },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("segment endpoint farther than {max_deg} degrees from query point ({lon}, {lat})")]
    LocalityViolation { lon: f64, lat: f64, max_deg: f64 },
    #[error("value {0} is not in the layer legend")]
    IllegalCategory(f64),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl GeoError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        GeoError::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        GeoError::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

/// A longitude/latitude point in degrees east / degrees north.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    /// Validates bounds (`lon` in [-180, 180], `lat` in [-90, 90]) and
    /// finiteness.
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lon.is_finite() || !lat.is_finite() || !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat)
        {
            return Err(GeoError::InvalidCoordinate { lon, lat });
        }
        Ok(Self { lon, lat })
    }
}

/// Binary internet-connectivity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Connected,
    Unconnected,
}

impl Connectivity {
    pub fn as_yes_no(self) -> &'static str {
        match self {
            Connectivity::Connected => "yes",
            Connectivity::Unconnected => "no",
        }
    }
}

/// A school point record; the unit of prediction.
///
/// `label` must be present on records used for training or evaluation.
/// The cell-tower distances and education level come from survey data and
/// are appended to the feature table only when present on every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolRecord {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub label: Option<Connectivity>,
    pub education_level: Option<String>,
    pub dist_lte_m: Option<f64>,
    pub dist_umts_m: Option<f64>,
    pub dist_gsm_m: Option<f64>,
}

impl SchoolRecord {
    /// Minimal record with just identity, name, location, and label.
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        location: GeoPoint,
        label: Option<Connectivity>,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            location,
            label,
            education_level: None,
            dist_lte_m: None,
            dist_umts_m: None,
            dist_gsm_m: None,
        }
    }
}
