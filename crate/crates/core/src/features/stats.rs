//! Zonal statistics over circular buffers.
//!
//! A pixel belongs to a buffer when its center lies within the radius
//! (great-circle distance), so every statistic here can be checked against
//! an exhaustive scan over all pixels. Nodata cells never reach the
//! statistics.

use std::collections::BTreeMap;

use super::{BufferSpec, FeatError};
use crate::geodata::{haversine_distance, GeoPoint, RasterLayer, METERS_PER_DEGREE};

/// Values of all pixels whose centers fall inside the buffer, in row-major
/// scan order. Nodata cells are dropped; an empty result is an error.
pub fn extract_buffer_values(
    raster: &RasterLayer,
    center: GeoPoint,
    spec: BufferSpec,
) -> Result<Vec<f64>, FeatError> {
    // A row can only contribute if its latitude alone keeps the distance
    // within the radius: great-circle distance never undercuts the
    // meridional gap. The slack covers the different rounding of the two
    // computations.
    let max_dlat_deg = spec.radius_m / METERS_PER_DEGREE + 1e-9;
    let mut values = Vec::new();
    for row in 0..raster.nrows {
        let row_lat = raster.cell_center(row, 0).lat;
        if (row_lat - center.lat).abs() > max_dlat_deg {
            continue;
        }
        for col in 0..raster.ncols {
            let pixel = raster.cell_center(row, col);
            if haversine_distance(center, pixel) <= spec.radius_m {
                if let Some(v) = raster.value(row, col) {
                    values.push(v);
                }
            }
        }
    }
    if values.is_empty() {
        return Err(FeatError::EmptyBuffer);
    }
    Ok(values)
}

/// Summary statistics of a continuous sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Population variance (divide by n).
    pub variance: f64,
    pub max: f64,
    pub min: f64,
}

pub fn continuous_stats(values: &[f64]) -> Result<Summary, FeatError> {
    if values.is_empty() {
        return Err(FeatError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Summary { mean, variance, max, min })
}

/// Per-class shares plus mode and code variance of a categorical sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalStats {
    /// One share per legend class, in legend order; absent classes are 0.
    pub pct: Vec<f64>,
    /// Most frequent class; ties go to the smallest class id.
    pub mode: i64,
    /// Population variance of the raw class codes.
    pub variance: f64,
}

pub fn categorical_stats(values: &[f64], legend: &[i64]) -> Result<CategoricalStats, FeatError> {
    if values.is_empty() {
        return Err(FeatError::EmptyInput);
    }
    let mut counts: BTreeMap<i64, usize> = legend.iter().map(|&c| (c, 0)).collect();
    for &v in values {
        if v.fract() != 0.0 {
            return Err(FeatError::UnknownClass(v));
        }
        match counts.get_mut(&(v as i64)) {
            Some(c) => *c += 1,
            None => return Err(FeatError::UnknownClass(v)),
        }
    }
    let n = values.len() as f64;
    let pct = legend.iter().map(|c| counts[c] as f64 / n).collect();
    // BTreeMap iterates ids ascending, so strict > keeps the smallest id
    // on ties.
    let mode = counts
        .iter()
        .fold((i64::MIN, 0usize), |best, (&id, &count)| {
            if count > best.1 {
                (id, count)
            } else {
                best
            }
        })
        .0;
    let variance = continuous_stats(values)?.variance;
    Ok(CategoricalStats { pct, mode, variance })
}

/// Mode of a continuous sample after quantizing to 3 decimals; ties go to
/// the smallest value. Used for layers with bounded continuous values
/// where a mode is still meaningful.
pub(crate) fn quantized_mode(values: &[f64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry((v * 1000.0).round() as i64).or_insert(0) += 1;
    }
    let key = counts
        .iter()
        .fold((0i64, 0usize), |best, (&k, &count)| if count > best.1 { (k, count) } else { best })
        .0;
    key as f64 / 1000.0
}

/// Buffer statistics for school-age population rasters; adds the total to
/// the continuous summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationZonal {
    pub sum: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
}

pub fn population_zonal(
    raster: &RasterLayer,
    center: GeoPoint,
    spec: BufferSpec,
) -> Result<PopulationZonal, FeatError> {
    let values = extract_buffer_values(raster, center, spec)?;
    let s = continuous_stats(&values)?;
    Ok(PopulationZonal {
        sum: values.iter().sum(),
        mean: s.mean,
        min: s.min,
        max: s.max,
        variance: s.variance,
    })
}
