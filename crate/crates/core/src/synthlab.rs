//! Seeded synthetic geodata: smooth rasters, planted-signal school
//! datasets, and cleaning-cascade fixtures.
//!
//! Everything here is a pure function of its seed, so tests regenerate
//! their own inputs instead of shipping binary fixtures. The textures are
//! not meant to look like real remote-sensing products, only to carry a
//! known signal.

use crate::features::{extract_buffer_values, BufferSpec};
use crate::geodata::{
    Connectivity, GeoPoint, RasterKind, RasterLayer, SchoolRecord, METERS_PER_DEGREE,
};
use crate::rng::{derive_seed, SplitMix64};

pub const NODATA: f64 = -9999.0;

/// Geometry and value range of a generated raster.
#[derive(Debug, Clone)]
pub struct RasterParams {
    pub xllcorner: f64,
    pub yllcorner: f64,
    /// Cell edge in degrees.
    pub cellsize: f64,
    /// Continuous output range [low, high]; collapse it to a point for a
    /// constant layer. Categorical layers ignore it.
    pub low: f64,
    pub high: f64,
    /// Noise lattice pitch in cells; larger values give smoother fields.
    pub scale: usize,
}

impl Default for RasterParams {
    fn default() -> Self {
        Self {
            xllcorner: 0.0,
            yllcorner: 0.0,
            cellsize: 0.01,
            low: 0.0,
            high: 1.0,
            scale: 8,
        }
    }
}

fn lattice_value(seed: u64, gx: u64, gy: u64) -> f64 {
    SplitMix64::new(derive_seed(seed, (gx << 32) | gy)).next_f64()
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Bilinear value noise over a seeded lattice, in [0, 1).
fn smooth_noise(seed: u64, x: f64, y: f64) -> f64 {
    let gx = x.floor();
    let gy = y.floor();
    let tx = smoothstep(x - gx);
    let ty = smoothstep(y - gy);
    let (gx, gy) = (gx as u64, gy as u64);
    let v00 = lattice_value(seed, gx, gy);
    let v10 = lattice_value(seed, gx + 1, gy);
    let v01 = lattice_value(seed, gx, gy + 1);
    let v11 = lattice_value(seed, gx + 1, gy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Seeded raster of the requested kind: continuous layers are smooth value
/// noise mapped onto [low, high]; categorical layers bin the same noise
/// into contiguous regions, one bin per legend class.
///
/// Panics when dims are zero or `scale` is zero; generation itself cannot
/// fail.
pub fn gen_raster(seed: u64, dims: (usize, usize), kind: RasterKind, params: &RasterParams) -> RasterLayer {
    let (ncols, nrows) = dims;
    assert!(ncols > 0 && nrows > 0, "raster dims must be positive");
    assert!(params.scale > 0, "noise scale must be positive");
    let mut values = Vec::with_capacity(ncols * nrows);
    for row in 0..nrows {
        for col in 0..ncols {
            let noise = smooth_noise(seed, col as f64 / params.scale as f64, row as f64 / params.scale as f64);
            let value = match &kind {
                RasterKind::Continuous => params.low + noise * (params.high - params.low),
                RasterKind::Categorical { classes } => {
                    let bin = ((noise * classes.len() as f64) as usize).min(classes.len() - 1);
                    classes[bin] as f64
                }
            };
            values.push(value);
        }
    }
    let layer = RasterLayer::new(
        ncols,
        nrows,
        params.xllcorner,
        params.yllcorner,
        params.cellsize,
        NODATA,
        values,
    )
    .expect("values match dims by construction");
    match kind {
        RasterKind::Continuous => layer,
        RasterKind::Categorical { classes } => layer
            .into_categorical(classes)
            .expect("generated values come from the legend"),
    }
}

/// Raster whose cells are `f` evaluated at each cell center. Handy for
/// hand-shaped fixtures (settlement masks, step functions).
pub fn raster_from_fn(
    dims: (usize, usize),
    params: &RasterParams,
    f: impl Fn(GeoPoint) -> f64,
) -> RasterLayer {
    let (ncols, nrows) = dims;
    assert!(ncols > 0 && nrows > 0, "raster dims must be positive");
    let probe = RasterLayer::new(
        ncols,
        nrows,
        params.xllcorner,
        params.yllcorner,
        params.cellsize,
        NODATA,
        vec![0.0; ncols * nrows],
    )
    .expect("values match dims by construction");
    let mut values = Vec::with_capacity(ncols * nrows);
    for row in 0..nrows {
        for col in 0..ncols {
            values.push(f(probe.cell_center(row, col)));
        }
    }
    RasterLayer::new(
        ncols,
        nrows,
        params.xllcorner,
        params.yllcorner,
        params.cellsize,
        NODATA,
        values,
    )
    .expect("values match dims by construction")
}

/// The label-generating rule of a planted dataset.
#[derive(Debug, Clone)]
pub enum SignalRule {
    /// Connected iff the mean signal value within `radius_m` of the school
    /// exceeds `threshold`.
    BufferMeanAbove { radius_m: f64, threshold: f64 },
}

impl SignalRule {
    fn evaluate(&self, layer: &RasterLayer, location: GeoPoint) -> bool {
        match self {
            SignalRule::BufferMeanAbove { radius_m, threshold } => {
                let spec = BufferSpec::new(*radius_m).expect("positive radius");
                let values =
                    extract_buffer_values(layer, location, spec).expect("signal layer covers the region");
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                mean > *threshold
            }
        }
    }
}

/// Recipe for a planted-signal school dataset.
#[derive(Debug, Clone)]
pub struct PlantSpec {
    pub n_schools: usize,
    /// South-west and north-east corners of the sampling region. The
    /// signal layer must cover every buffer drawn inside it.
    pub bbox: (GeoPoint, GeoPoint),
    pub rule: SignalRule,
    /// Probability of flipping each label independently; must stay below
    /// 0.5 or the planted signal inverts.
    pub noise_rate: f64,
    pub seed: u64,
}

/// Uniform seeded school locations labeled by the rule, then flipped
/// independently at the noise rate. Locations and flips draw from separate
/// seed streams, so changing the noise rate never moves a school.
///
/// Panics when the noise rate is outside [0, 0.5).
pub fn gen_schools(spec: &PlantSpec, signal: &RasterLayer) -> Vec<SchoolRecord> {
    assert!(
        (0.0..0.5).contains(&spec.noise_rate),
        "noise rate must lie in [0, 0.5)"
    );
    let (sw, ne) = spec.bbox;
    let mut location_rng = SplitMix64::new(derive_seed(spec.seed, 0));
    let mut noise_rng = SplitMix64::new(derive_seed(spec.seed, 1));
    let mut name_rng = SplitMix64::new(derive_seed(spec.seed, 2));
    let mut schools = Vec::with_capacity(spec.n_schools);
    for index in 0..spec.n_schools {
        let lon = sw.lon + location_rng.next_f64() * (ne.lon - sw.lon);
        let lat = sw.lat + location_rng.next_f64() * (ne.lat - sw.lat);
        let location = GeoPoint::new(lon, lat).expect("bbox corners are valid coordinates");
        let mut connected = spec.rule.evaluate(signal, location);
        if noise_rng.next_f64() < spec.noise_rate {
            connected = !connected;
        }
        let label = if connected {
            Connectivity::Connected
        } else {
            Connectivity::Unconnected
        };
        // The random suffix keeps any two generated names far apart in
        // edit distance, so only deliberately injected variants can
        // trigger name-based deduplication.
        let name = format!("School {index:04}-{:08x}", name_rng.next_u64() >> 32);
        schools.push(SchoolRecord::new(
            format!("syn{index:05}"),
            name,
            location,
            Some(label),
        ));
    }
    schools
}

/// Destination of moving `distance_m` from `p` along a compass bearing
/// (0 = north, 90 = east). Equirectangular, accurate at the sub-kilometer
/// offsets used for planted duplicates.
pub fn offset_point(p: GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    let bearing = bearing_deg.to_radians();
    let lat = p.lat + distance_m * bearing.cos() / METERS_PER_DEGREE;
    let lon = p.lon + distance_m * bearing.sin() / (METERS_PER_DEGREE * p.lat.to_radians().cos());
    GeoPoint::new(lon, lat).expect("offset stays in bounds")
}

/// Appends a near-duplicate of every `stride`-th school, `distance_m` away
/// with the same name. The clone id is the original's plus a suffix that
/// sorts after any alphanumeric id, so the original always remains the
/// surviving group representative. Returns the enlarged list and the
/// injected ids.
pub fn inject_duplicates(
    schools: &[SchoolRecord],
    stride: usize,
    distance_m: f64,
) -> (Vec<SchoolRecord>, Vec<String>) {
    assert!(stride > 0, "stride must be positive");
    let mut out = schools.to_vec();
    let mut injected = Vec::new();
    for original in schools.iter().step_by(stride) {
        let mut clone = original.clone();
        clone.id = format!("{}~dup", original.id);
        clone.location = offset_point(original.location, 45.0, distance_m);
        injected.push(clone.id.clone());
        out.push(clone);
    }
    (out, injected)
}

/// Appends a near-name variant of every `stride`-th school: one character
/// of the name changed, placed `distance_m` away. Same id convention as
/// [`inject_duplicates`].
pub fn inject_name_variants(
    schools: &[SchoolRecord],
    stride: usize,
    distance_m: f64,
) -> (Vec<SchoolRecord>, Vec<String>) {
    assert!(stride > 0, "stride must be positive");
    let mut out = schools.to_vec();
    let mut injected = Vec::new();
    for original in schools.iter().step_by(stride) {
        let mut clone = original.clone();
        clone.id = format!("{}~var", original.id);
        let mut name: Vec<char> = original.name.chars().collect();
        let last = name.last_mut().expect("school names are nonempty");
        *last = if *last == 'x' { 'y' } else { 'x' };
        clone.name = name.into_iter().collect();
        clone.location = offset_point(original.location, 135.0, distance_m);
        injected.push(clone.id.clone());
        out.push(clone);
    }
    (out, injected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaning::{clean_cascade, normalized_levenshtein, CascadeToggles};
    use crate::features::{build_feature_table, LayerConfig, RasterPlan, Stat};
    use crate::geodata::{
        haversine_distance, parse_raster, parse_schools_csv, write_raster, write_schools_csv,
    };
    use crate::models::{fit, predict, ModelConfig};
    use crate::preprocess::{stratified_split, SplitSpec};

    fn region_params() -> RasterParams {
        RasterParams {
            xllcorner: 29.5,
            yllcorner: -2.5,
            ..RasterParams::default()
        }
    }

    // Schools stay inset from the raster edge so every buffer is covered.
    fn region_bbox() -> (GeoPoint, GeoPoint) {
        (
            GeoPoint::new(29.55, -2.45).unwrap(),
            GeoPoint::new(30.65, -1.45).unwrap(),
        )
    }

    fn plant(n_schools: usize, noise_rate: f64, seed: u64) -> PlantSpec {
        PlantSpec {
            n_schools,
            bbox: region_bbox(),
            rule: SignalRule::BufferMeanAbove {
                radius_m: 1000.0,
                threshold: 0.5,
            },
            noise_rate,
            seed,
        }
    }

    fn signal_raster() -> RasterLayer {
        gen_raster(7, (120, 110), RasterKind::Continuous, &region_params())
    }

    #[test]
    fn same_seed_reproduces_rasters_and_schools() {
        let a = gen_raster(7, (40, 30), RasterKind::Continuous, &region_params());
        let b = gen_raster(7, (40, 30), RasterKind::Continuous, &region_params());
        assert_eq!(a, b);
        let c = gen_raster(8, (40, 30), RasterKind::Continuous, &region_params());
        assert_ne!(a, c);

        let signal = signal_raster();
        let schools_a = gen_schools(&plant(50, 0.1, 3), &signal);
        let schools_b = gen_schools(&plant(50, 0.1, 3), &signal);
        assert_eq!(schools_a, schools_b);
    }

    #[test]
    fn categorical_values_stay_in_the_legend() {
        let legend = vec![10, 20, 40];
        let layer = gen_raster(
            11,
            (50, 50),
            RasterKind::Categorical { classes: legend.clone() },
            &region_params(),
        );
        let mut seen = std::collections::BTreeSet::new();
        for row in 0..layer.nrows {
            for col in 0..layer.ncols {
                let v = layer.value(row, col).unwrap();
                assert!(legend.contains(&(v as i64)));
                seen.insert(v as i64);
            }
        }
        // The field actually has regions, not a single class.
        assert!(seen.len() > 1);
    }

    #[test]
    fn constant_params_give_constant_rasters() {
        let params = RasterParams {
            low: 2.5,
            high: 2.5,
            ..region_params()
        };
        let layer = gen_raster(3, (20, 20), RasterKind::Continuous, &params);
        for row in 0..layer.nrows {
            for col in 0..layer.ncols {
                assert_eq!(layer.value(row, col), Some(2.5));
            }
        }

        let single = gen_raster(
            3,
            (20, 20),
            RasterKind::Categorical { classes: vec![7] },
            &region_params(),
        );
        for row in 0..single.nrows {
            for col in 0..single.ncols {
                assert_eq!(single.value(row, col), Some(7.0));
            }
        }
    }

    #[test]
    fn zero_noise_labels_match_the_rule() {
        let signal = signal_raster();
        let spec = plant(60, 0.0, 21);
        let schools = gen_schools(&spec, &signal);
        assert_eq!(schools.len(), 60);
        for school in &schools {
            let expected = spec.rule.evaluate(&signal, school.location);
            let labeled = school.label == Some(Connectivity::Connected);
            assert_eq!(labeled, expected, "school {}", school.id);
        }
        let (sw, ne) = spec.bbox;
        for school in &schools {
            assert!((sw.lon..=ne.lon).contains(&school.location.lon));
            assert!((sw.lat..=ne.lat).contains(&school.location.lat));
        }
    }

    #[test]
    fn noise_flips_the_expected_fraction_without_moving_schools() {
        let signal = signal_raster();
        let clean = gen_schools(&plant(1000, 0.0, 5), &signal);
        let noisy = gen_schools(&plant(1000, 0.05, 5), &signal);
        let mut flipped = 0;
        for (a, b) in clean.iter().zip(&noisy) {
            assert_eq!(a.location, b.location);
            assert_eq!(a.name, b.name);
            if a.label != b.label {
                flipped += 1;
            }
        }
        let fraction = flipped as f64 / 1000.0;
        assert!(
            (fraction - 0.05).abs() <= 0.02,
            "flipped fraction {fraction} out of tolerance"
        );
    }

    #[test]
    fn noise_free_threshold_rule_is_learnable_by_a_shallow_tree() {
        let signal = signal_raster();
        let schools = gen_schools(&plant(400, 0.0, 13), &signal);

        let cfg = LayerConfig {
            rasters: vec![RasterPlan {
                name: "signal".to_string(),
                layer: signal,
                stats: vec![Stat::Mean, Stat::Variance],
            }],
            ..LayerConfig::default()
        };
        let table = build_feature_table(&schools, &cfg, BufferSpec::new(1000.0).unwrap()).unwrap();
        let (train, _, test) = stratified_split(&table, &SplitSpec::with_default_fractions(99)).unwrap();

        let model = fit(
            &train,
            &ModelConfig::Tree {
                max_depth: 2,
                min_samples_split: 2,
                min_samples_leaf: 1,
                seed: 0,
            },
        )
        .unwrap();
        let (preds, _) = predict(&model, &test).unwrap();
        let truth = test.labels().unwrap();
        let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
        assert_eq!(correct, truth.len(), "expected perfect test accuracy");
    }

    #[test]
    fn offset_point_moves_the_requested_distance() {
        let start = GeoPoint::new(30.0, -2.0).unwrap();
        for bearing in [0.0, 45.0, 90.0, 180.0, 270.0] {
            for distance in [30.0, 150.0, 1000.0] {
                let moved = offset_point(start, bearing, distance);
                let measured = haversine_distance(start, moved);
                assert!(
                    (measured - distance).abs() < distance * 0.01 + 0.01,
                    "bearing {bearing} distance {distance} measured {measured}"
                );
            }
        }
        assert!(offset_point(start, 0.0, 1000.0).lat > start.lat);
        assert!(offset_point(start, 90.0, 1000.0).lon > start.lon);
    }

    #[test]
    fn injected_duplicates_are_removed_exactly() {
        let signal = signal_raster();
        let schools = gen_schools(&plant(100, 0.0, 17), &signal);
        let (with_dups, injected) = inject_duplicates(&schools, 7, 30.0);
        assert_eq!(with_dups.len(), 100 + injected.len());

        let toggles = CascadeToggles {
            keywords: false,
            proximity: true,
            name: false,
            settlement: false,
        };
        let (cleaned, report) = clean_cascade(&with_dups, toggles, None);
        assert_eq!(cleaned.len(), 100);
        let mut removed = report.removed_proximity.clone();
        removed.sort();
        let mut expected = injected.clone();
        expected.sort();
        assert_eq!(removed, expected);
    }

    #[test]
    fn injected_name_variants_pass_the_similarity_bar() {
        let signal = signal_raster();
        let schools = gen_schools(&plant(40, 0.0, 19), &signal);
        let (with_variants, injected) = inject_name_variants(&schools, 5, 150.0);
        for id in &injected {
            let variant = with_variants.iter().find(|s| &s.id == id).unwrap();
            let original_id = id.trim_end_matches("~var");
            let original = with_variants.iter().find(|s| s.id == original_id).unwrap();
            let sim = normalized_levenshtein(&original.name, &variant.name);
            assert!(sim >= 0.85, "similarity {sim} for {id}");
            assert!(haversine_distance(original.location, variant.location) <= 300.0);
            assert!(variant.id > original.id);
        }
    }

    #[test]
    fn generated_fixtures_round_trip_through_the_file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let raster = signal_raster();
        let raster_path = dir.path().join("signal.asc");
        write_raster(&raster_path, &raster).unwrap();
        let parsed = parse_raster(&raster_path).unwrap();
        assert_eq!(parsed.ncols, raster.ncols);
        assert_eq!(parsed.nrows, raster.nrows);
        for row in 0..raster.nrows {
            for col in 0..raster.ncols {
                assert_eq!(parsed.value(row, col), raster.value(row, col));
            }
        }

        let schools = gen_schools(&plant(25, 0.1, 23), &signal_raster());
        let csv_path = dir.path().join("schools.csv");
        write_schools_csv(&csv_path, &schools).unwrap();
        let parsed = parse_schools_csv(&csv_path).unwrap();
        assert_eq!(parsed, schools);
    }
}
