//! ASCII-grid rasters.
//!
//! The on-disk format is the plain-text grid used by common GIS tools: six
//! header lines (`ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`,
//! `NODATA_value`, in that order) followed by cell values in row-major
//! order, northernmost row first.

use std::fs;
use std::path::Path;

use super::{GeoError, GeoPoint};

/// How a layer's cell values are interpreted.
#[derive(Debug, Clone, PartialEq)]
pub enum RasterKind {
    /// Real-valued measurements (population counts, radiance, ...).
    Continuous,
    /// Integer class codes drawn from a fixed legend, e.g. land-cover
    /// classes. The legend order fixes the order of per-class outputs.
    Categorical { classes: Vec<i64> },
}

/// A single-band raster in geographic coordinates.
///
/// Grid cells are squares of `cellsize` degrees anchored at the lower-left
/// corner (`xllcorner`, `yllcorner`). Row 0 is the northernmost row.
/// Invariant: `values.len() == ncols * nrows`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterLayer {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata: f64,
    pub kind: RasterKind,
    values: Vec<f64>,
}

impl RasterLayer {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self, GeoError> {
        if values.len() != ncols * nrows {
            return Err(GeoError::DimensionMismatch {
                ncols,
                nrows,
                expected: ncols * nrows,
                found: values.len(),
            });
        }
        Ok(Self {
            ncols,
            nrows,
            xllcorner,
            yllcorner,
            cellsize,
            nodata,
            kind: RasterKind::Continuous,
            values,
        })
    }

    /// Cell value, or `None` when the cell is out of bounds or holds the
    /// nodata sentinel.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.nrows || col >= self.ncols {
            return None;
        }
        let v = self.values[row * self.ncols + col];
        if v == self.nodata || v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Geographic center of a cell. Row 0 is the top (northernmost) row.
    pub fn cell_center(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lon: self.xllcorner + (col as f64 + 0.5) * self.cellsize,
            lat: self.yllcorner + (self.nrows as f64 - row as f64 - 0.5) * self.cellsize,
        }
    }

    /// Reinterprets the layer as categorical, checking every non-nodata
    /// value is an integer present in `classes`.
    pub fn into_categorical(mut self, classes: Vec<i64>) -> Result<Self, GeoError> {
        for &v in &self.values {
            if v == self.nodata || v.is_nan() {
                continue;
            }
            if v.fract() != 0.0 || !classes.contains(&(v as i64)) {
                return Err(GeoError::IllegalCategory(v));
            }
        }
        self.kind = RasterKind::Categorical { classes };
        Ok(self)
    }

    /// Serializes to the ASCII-grid text form. Values are written with
    /// shortest round-trip formatting, so parse-write cycles are
    /// byte-stable.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("ncols {}\n", self.ncols));
        out.push_str(&format!("nrows {}\n", self.nrows));
        out.push_str(&format!("xllcorner {}\n", self.xllcorner));
        out.push_str(&format!("yllcorner {}\n", self.yllcorner));
        out.push_str(&format!("cellsize {}\n", self.cellsize));
        out.push_str(&format!("NODATA_value {}\n", self.nodata));
        for row in 0..self.nrows {
            let cells = &self.values[row * self.ncols..(row + 1) * self.ncols];
            let line: Vec<String> = cells.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_ascii(text: &str, origin: &str) -> Result<Self, GeoError> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<f64, GeoError> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| GeoError::parse(origin, 0, format!("missing header line '{key}'")))?;
            let mut parts = line.split_whitespace();
            let found = parts
                .next()
                .ok_or_else(|| GeoError::parse(origin, idx + 1, format!("expected header '{key}'")))?;
            if !found.eq_ignore_ascii_case(key) {
                return Err(GeoError::parse(
                    origin,
                    idx + 1,
                    format!("expected header '{key}', found '{found}'"),
                ));
            }
            let raw = parts
                .next()
                .ok_or_else(|| GeoError::parse(origin, idx + 1, format!("header '{key}' has no value")))?;
            raw.parse::<f64>()
                .map_err(|_| GeoError::parse(origin, idx + 1, format!("bad numeric value '{raw}'")))
        };

        let ncols = header("ncols")? as usize;
        let nrows = header("nrows")? as usize;
        let xllcorner = header("xllcorner")?;
        let yllcorner = header("yllcorner")?;
        let cellsize = header("cellsize")?;
        let nodata = header("NODATA_value")?;

        let mut values = Vec::with_capacity(ncols * nrows);
        for (idx, line) in lines {
            for raw in line.split_whitespace() {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| GeoError::parse(origin, idx + 1, format!("bad cell value '{raw}'")))?;
                values.push(v);
            }
        }
        Self::new(ncols, nrows, xllcorner, yllcorner, cellsize, nodata, values)
    }
}

pub fn parse_raster(path: impl AsRef<Path>) -> Result<RasterLayer, GeoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GeoError::io(path.display().to_string(), e))?;
    RasterLayer::from_ascii(&text, &path.display().to_string())
}

pub fn write_raster(path: impl AsRef<Path>, layer: &RasterLayer) -> Result<(), GeoError> {
    let path = path.as_ref();
    fs::write(path, layer.to_ascii()).map_err(|e| GeoError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample() -> RasterLayer {
        RasterLayer::new(
            3,
            2,
            30.0,
            -2.0,
            0.5,
            -9999.0,
            vec![1.0, 2.5, -9999.0, 0.0, 4.25, 6.0],
        )
        .unwrap()
    }

    #[test]
    fn value_lookup_handles_nodata_and_bounds() {
        let r = sample();
        assert_eq!(r.value(0, 0), Some(1.0));
        assert_eq!(r.value(0, 2), None);
        assert_eq!(r.value(1, 2), Some(6.0));
        assert_eq!(r.value(2, 0), None);
        assert_eq!(r.value(0, 3), None);
    }

    #[test]
    fn cell_centers() {
        let r = sample();
        // Top-left cell: half a cell east of xllcorner, 1.5 cells above
        // yllcorner (two rows of 0.5 degrees).
        let c = r.cell_center(0, 0);
        assert_abs_diff_eq!(c.lon, 30.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lat, -1.25, epsilon = 1e-12);
        let c = r.cell_center(1, 2);
        assert_abs_diff_eq!(c.lon, 31.25, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lat, -1.75, epsilon = 1e-12);
    }

    #[test]
    fn ascii_round_trip_is_byte_stable() {
        let r = sample();
        let text = r.to_ascii();
        let back = RasterLayer::from_ascii(&text, "<mem>").unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_ascii(), text);
    }

    #[test]
    fn parses_reference_text() {
        let text = "ncols 2\nnrows 2\nxllcorner 29.0\nyllcorner -3.0\ncellsize 0.25\nNODATA_value -9999\n1 2\n3 -9999\n";
        let r = RasterLayer::from_ascii(text, "<mem>").unwrap();
        assert_eq!(r.ncols, 2);
        assert_eq!(r.value(1, 0), Some(3.0));
        assert_eq!(r.value(1, 1), None);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = RasterLayer::new(2, 2, 0.0, 0.0, 1.0, -9999.0, vec![1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(GeoError::DimensionMismatch { found: 3, .. })));
        let text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3 4 5\n";
        assert!(matches!(
            RasterLayer::from_ascii(text, "<mem>"),
            Err(GeoError::DimensionMismatch { found: 5, .. })
        ));
    }

    #[test]
    fn header_order_enforced() {
        let text = "nrows 2\nncols 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3 4\n";
        assert!(matches!(
            RasterLayer::from_ascii(text, "<mem>"),
            Err(GeoError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn categorical_legend_enforced() {
        let ok = RasterLayer::new(2, 1, 0.0, 0.0, 1.0, -9999.0, vec![1.0, -9999.0])
            .unwrap()
            .into_categorical(vec![1, 2, 3]);
        assert!(matches!(ok.unwrap().kind, RasterKind::Categorical { .. }));

        let bad = RasterLayer::new(2, 1, 0.0, 0.0, 1.0, -9999.0, vec![1.0, 4.0])
            .unwrap()
            .into_categorical(vec![1, 2, 3]);
        assert!(matches!(bad, Err(GeoError::IllegalCategory(v)) if v == 4.0));

        let frac = RasterLayer::new(2, 1, 0.0, 0.0, 1.0, -9999.0, vec![1.5, 2.0])
            .unwrap()
            .into_categorical(vec![1, 2, 3]);
        assert!(matches!(frac, Err(GeoError::IllegalCategory(v)) if v == 1.5));
    }

    proptest! {
        // Any finite grid survives a write-parse cycle exactly.
        #[test]
        fn round_trip_preserves_values(
            vals in proptest::collection::vec(-1e9f64..1e9, 12),
            xll in -179.0f64..178.0,
            yll in -89.0f64..88.0,
        ) {
            let r = RasterLayer::new(4, 3, xll, yll, 0.01, -9999.0, vals).unwrap();
            let back = RasterLayer::from_ascii(&r.to_ascii(), "<mem>").unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
