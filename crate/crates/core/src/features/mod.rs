//! Engineered-feature construction.
//!
//! Each school becomes one row of a [`FeatureTable`]. Columns come from,
//! in order: raster layers summarized over a circular buffer, distance to
//! the nearest transmission line, nearest speed-test tile measurements
//! (mobile then fixed), school-age population zonal statistics,
//! administrative-zone one-hot encoding, then per-school survey fields
//! (education-level one-hot, cell-tower distances) when every record
//! carries them. Precomputed embedding columns are merged separately with
//! [`merge_embeddings`].
//!
//! Column names follow `<layer>.<stat>[.<class>]` and are stable across
//! runs; downstream importance reports key off them.

mod spatial;
mod stats;
mod table;

pub use spatial::{admin_one_hot, distance_to_nearest_line, nearest_tile_features, TileFeatures};
pub use stats::{
    categorical_stats, continuous_stats, extract_buffer_values, population_zonal, CategoricalStats,
    PopulationZonal, Summary,
};
pub use table::{merge_embeddings, FeatureTable};

use std::collections::BTreeSet;

use crate::geodata::{GeoError, NetworkKind, PolyLineSet, PolygonSet, OoklaTile, RasterLayer, SchoolRecord};

/// Errors raised while building features.
#[derive(Debug, thiserror::Error)]
pub enum FeatError {
    #[error("buffer contains no valid pixels")]
    EmptyBuffer,
    #[error("empty input")]
    EmptyInput,
    #[error("value {0} is not in the legend")]
    UnknownClass(f64),
    #[error("layer '{0}' has no members")]
    EmptyLayer(String),
    #[error("no embedding row for id '{0}'")]
    MissingEmbedding(String),
    #[error("embedding rows have inconsistent width: expected {expected}, found {found}")]
    EmbeddingDimension { expected: usize, found: usize },
    #[error("column '{column}' holds a non-finite value at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("no column named '{0}'")]
    UnknownColumn(String),
    #[error("column '{column}' has {found} values for {expected} rows")]
    ColumnLength {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("stat '{stat}' is not legal for layer '{layer}'")]
    IllegalStat { layer: String, stat: String },
    #[error("school {id}")]
    School {
        id: String,
        #[source]
        source: Box<FeatError>,
    },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

impl FeatError {
    fn for_school(id: &str, source: FeatError) -> Self {
        FeatError::School {
            id: id.to_string(),
            source: Box::new(source),
        }
    }
}

/// Circular buffer radius around a school, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferSpec {
    pub radius_m: f64,
}

impl BufferSpec {
    pub const DEFAULT_RADIUS_M: f64 = 1000.0;

    pub fn new(radius_m: f64) -> Result<Self, FeatError> {
        if !radius_m.is_finite() || radius_m <= 0.0 {
            return Err(FeatError::EmptyInput);
        }
        Ok(Self { radius_m })
    }
}

impl Default for BufferSpec {
    fn default() -> Self {
        Self {
            radius_m: Self::DEFAULT_RADIUS_M,
        }
    }
}

/// One summary statistic computed over buffer pixel values.
///
/// `Pct` expands to one column per legend class and is only legal on
/// categorical layers. `Mode` on a continuous layer quantizes values to 3
/// decimals first (used for the human-modification layer, whose values are
/// continuous in [0, 1]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Mean,
    Variance,
    Max,
    Min,
    Sum,
    Mode,
    Pct,
}

impl Stat {
    pub fn as_str(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Variance => "variance",
            Stat::Max => "max",
            Stat::Min => "min",
            Stat::Sum => "sum",
            Stat::Mode => "mode",
            Stat::Pct => "pct",
        }
    }
}

impl std::str::FromStr for Stat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Stat::Mean),
            "variance" => Ok(Stat::Variance),
            "max" => Ok(Stat::Max),
            "min" => Ok(Stat::Min),
            "sum" => Ok(Stat::Sum),
            "mode" => Ok(Stat::Mode),
            "pct" => Ok(Stat::Pct),
            other => Err(format!("unknown stat '{other}'")),
        }
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named raster layer plus the statistics to emit for it.
#[derive(Debug, Clone)]
pub struct RasterPlan {
    pub name: String,
    pub layer: RasterLayer,
    pub stats: Vec<Stat>,
}

impl RasterPlan {
    /// Checks every requested stat is legal for the layer kind.
    pub fn validate(&self) -> Result<(), FeatError> {
        use crate::geodata::RasterKind;
        for stat in &self.stats {
            if *stat == Stat::Pct && matches!(self.layer.kind, RasterKind::Continuous) {
                return Err(FeatError::IllegalStat {
                    layer: self.name.clone(),
                    stat: stat.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Everything the table builder needs, already loaded. Column order follows
/// field order here and plan order within each field.
#[derive(Debug, Clone, Default)]
pub struct LayerConfig {
    pub rasters: Vec<RasterPlan>,
    /// Transmission grid; emits one `grid.distance` column.
    pub grid: Option<PolyLineSet>,
    /// Speed-test tiles of both kinds; emits `ookla_mobile.*` then
    /// `ookla_fixed.*` (6 columns each).
    pub tiles: Option<Vec<OoklaTile>>,
    /// School-age population rasters; each emits `<name>.{sum,mean,min,max,variance}`.
    pub population: Vec<(String, RasterLayer)>,
    /// Administrative zones; emits one `admin.zone.<id>` column per zone.
    pub admin: Option<PolygonSet>,
}

const TILE_STATS: [&str; 6] = ["avg_d_kbps", "avg_u_kbps", "avg_lat_ms", "tests", "devices", "distance"];
const POP_STATS: [&str; 5] = ["sum", "mean", "min", "max", "variance"];

/// Builds one feature row per school. Column order is fixed by the config;
/// any per-school failure aborts the build, annotated with the school id.
pub fn build_feature_table(
    schools: &[SchoolRecord],
    cfg: &LayerConfig,
    spec: BufferSpec,
) -> Result<FeatureTable, FeatError> {
    for plan in &cfg.rasters {
        plan.validate()?;
    }

    let mut names: Vec<String> = Vec::new();
    for plan in &cfg.rasters {
        for stat in &plan.stats {
            match (stat, &plan.layer.kind) {
                (Stat::Pct, crate::geodata::RasterKind::Categorical { classes }) => {
                    for class in classes {
                        names.push(format!("{}.pct.{class}", plan.name));
                    }
                }
                _ => names.push(format!("{}.{stat}", plan.name)),
            }
        }
    }
    if cfg.grid.is_some() {
        names.push("grid.distance".to_string());
    }
    if cfg.tiles.is_some() {
        for prefix in ["ookla_mobile", "ookla_fixed"] {
            for stat in TILE_STATS {
                names.push(format!("{prefix}.{stat}"));
            }
        }
    }
    for (name, _) in &cfg.population {
        for stat in POP_STATS {
            names.push(format!("{name}.{stat}"));
        }
    }
    if let Some(zones) = &cfg.admin {
        for zone in zones.zones() {
            names.push(format!("admin.zone.{}", zone.id));
        }
    }
    let education: Option<Vec<String>> = if !schools.is_empty() && schools.iter().all(|s| s.education_level.is_some())
    {
        let cats: BTreeSet<String> = schools.iter().filter_map(|s| s.education_level.clone()).collect();
        for cat in &cats {
            names.push(format!("school.education_level.{cat}"));
        }
        Some(cats.into_iter().collect())
    } else {
        None
    };
    let cell_columns: Vec<(&str, fn(&SchoolRecord) -> Option<f64>)> = vec![
        ("school.dist_lte_m", |s| s.dist_lte_m),
        ("school.dist_umts_m", |s| s.dist_umts_m),
        ("school.dist_gsm_m", |s| s.dist_gsm_m),
    ];
    let cell_present: Vec<bool> = cell_columns
        .iter()
        .map(|(_, get)| !schools.is_empty() && schools.iter().all(|s| get(s).is_some()))
        .collect();
    for ((name, _), present) in cell_columns.iter().zip(&cell_present) {
        if *present {
            names.push(name.to_string());
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(schools.len());
    for school in schools {
        let row = feature_row(school, cfg, spec, &education, &cell_columns, &cell_present)
            .map_err(|e| FeatError::for_school(&school.id, e))?;
        debug_assert_eq!(row.len(), names.len());
        rows.push(row);
    }

    let ids: Vec<String> = schools.iter().map(|s| s.id.clone()).collect();
    let labels: Option<Vec<u8>> = if !schools.is_empty() && schools.iter().all(|s| s.label.is_some()) {
        Some(
            schools
                .iter()
                .map(|s| (s.label == Some(crate::geodata::Connectivity::Connected)) as u8)
                .collect(),
        )
    } else {
        None
    };

    let columns: Vec<(String, Vec<f64>)> = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| (name, rows.iter().map(|r| r[j]).collect()))
        .collect();
    FeatureTable::new(ids, columns, labels)
}

fn feature_row(
    school: &SchoolRecord,
    cfg: &LayerConfig,
    spec: BufferSpec,
    education: &Option<Vec<String>>,
    cell_columns: &[(&str, fn(&SchoolRecord) -> Option<f64>)],
    cell_present: &[bool],
) -> Result<Vec<f64>, FeatError> {
    let mut row = Vec::new();
    let p = school.location;

    for plan in &cfg.rasters {
        let values = extract_buffer_values(&plan.layer, p, spec)?;
        let summary = continuous_stats(&values)?;
        for stat in &plan.stats {
            match (stat, &plan.layer.kind) {
                (Stat::Pct, crate::geodata::RasterKind::Categorical { classes }) => {
                    let cat = categorical_stats(&values, classes)?;
                    row.extend(cat.pct);
                }
                (Stat::Mode, crate::geodata::RasterKind::Categorical { classes }) => {
                    row.push(categorical_stats(&values, classes)?.mode as f64);
                }
                (Stat::Mode, crate::geodata::RasterKind::Continuous) => {
                    row.push(stats::quantized_mode(&values));
                }
                (Stat::Mean, _) => row.push(summary.mean),
                (Stat::Variance, _) => row.push(summary.variance),
                (Stat::Max, _) => row.push(summary.max),
                (Stat::Min, _) => row.push(summary.min),
                (Stat::Sum, _) => row.push(values.iter().sum()),
                (Stat::Pct, crate::geodata::RasterKind::Continuous) => unreachable!("validated above"),
            }
        }
    }
    if let Some(grid) = &cfg.grid {
        row.push(distance_to_nearest_line(p, grid)?);
    }
    if let Some(tiles) = &cfg.tiles {
        for kind in [NetworkKind::Mobile, NetworkKind::Fixed] {
            let t = nearest_tile_features(p, tiles, kind)?;
            row.extend([t.avg_d_kbps, t.avg_u_kbps, t.avg_lat_ms, t.tests, t.devices, t.distance]);
        }
    }
    for (_, layer) in &cfg.population {
        let z = population_zonal(layer, p, spec)?;
        row.extend([z.sum, z.mean, z.min, z.max, z.variance]);
    }
    if let Some(zones) = &cfg.admin {
        row.extend(admin_one_hot(p, zones)?);
    }
    if let Some(cats) = education {
        let level = school.education_level.as_deref().expect("checked by caller");
        for cat in cats {
            row.push((cat == level) as u8 as f64);
        }
    }
    for ((_, get), present) in cell_columns.iter().zip(cell_present) {
        if *present {
            row.push(get(school).expect("checked by caller"));
        }
    }
    Ok(row)
}
