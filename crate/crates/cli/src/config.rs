//! Experiment configuration: one TOML file declares every input path,
//! the feature plan, the cleaning cascade, the model search, and the run
//! layout. All randomness downstream flows from the single root seed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use schoolconn::cleaning::CascadeToggles;
use schoolconn::features::{LayerConfig, RasterPlan, Stat};
use schoolconn::geodata::{
    parse_geojson, parse_raster, parse_schools_csv, GeoPoint, RasterLayer, SchoolRecord, VectorData,
};
use schoolconn::models::{default_grid, Family, ModelConfig};
use schoolconn::preprocess::SplitSpec;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub inputs: Inputs,
    pub features: Features,
    #[serde(default)]
    pub cleaning: Cleaning,
    pub model: Model,
    #[serde(default)]
    pub split: Split,
    pub experiment: Experiment,
    pub map: Option<MapWindow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub schools: PathBuf,
    #[serde(default)]
    pub rasters: Vec<RasterInput>,
    #[serde(default)]
    pub population: Vec<PopulationInput>,
    pub grid: Option<PathBuf>,
    pub tiles: Option<PathBuf>,
    pub admin: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterInput {
    pub name: String,
    pub path: PathBuf,
    /// Summary statistics to emit, in column order.
    pub stats: Vec<String>,
    /// Legend of class codes; present means the layer is categorical.
    pub classes: Option<Vec<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationInput {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    pub buffer_radius_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cleaning {
    pub keywords: bool,
    pub proximity: bool,
    pub name: bool,
    pub settlement: bool,
    /// Building-footprint density raster; required when `settlement` is on.
    pub footprints: Option<PathBuf>,
    /// Settlement-layer raster; required when `settlement` is on.
    pub ghsl: Option<PathBuf>,
}

impl Default for Cleaning {
    fn default() -> Self {
        Self {
            keywords: true,
            proximity: true,
            name: true,
            settlement: false,
            footprints: None,
            ghsl: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub family: String,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    /// Explicit hyperparameter candidates; omitted means the stock grid
    /// for the family.
    #[serde(default)]
    pub candidates: Vec<toml::Table>,
}

fn default_cv_folds() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Split {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
            seed: 42,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub n_runs: usize,
    pub output_dir: PathBuf,
}

/// Optional lon/lat window for the exported prediction map.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapWindow {
    pub west: f64,
    pub south: f64,
    pub east: f64,
    pub north: f64,
}

impl MapWindow {
    pub fn corners(&self) -> Result<(GeoPoint, GeoPoint)> {
        let sw = GeoPoint::new(self.west, self.south).context("map window south-west corner")?;
        let ne = GeoPoint::new(self.east, self.north).context("map window north-east corner")?;
        if sw.lon > ne.lon || sw.lat > ne.lat {
            bail!("map window corners are swapped");
        }
        Ok((sw, ne))
    }
}

/// The parsed config plus the raw bytes it came from, kept for the
/// run manifest.
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: String,
}

/// Reads and validates a config file, then applies the command-line
/// overrides. Input files are only checked for existence here; they are
/// parsed when a command needs them.
pub fn load_config(
    path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<LoadedConfig> {
    let raw = fs::read_to_string(path).with_context(|| format!("missing input: {}", path.display()))?;
    let mut config: ExperimentConfig =
        toml::from_str(&raw).with_context(|| format!("parse {}", path.display()))?;
    if let Some(seed) = seed_override {
        config.split.seed = seed;
    }
    if let Some(out) = out_override {
        config.experiment.output_dir = out.to_path_buf();
    }
    validate(&config)?;
    Ok(LoadedConfig { config, raw })
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if !(config.features.buffer_radius_m > 0.0) {
        bail!("buffer_radius_m must be positive");
    }
    if config.experiment.n_runs < 1 {
        bail!("n_runs must be at least 1");
    }
    if config.model.cv_folds < 2 {
        bail!("cv_folds must be at least 2");
    }
    config.split_spec()?;
    config.family()?;
    if config.cleaning.settlement && (config.cleaning.footprints.is_none() || config.cleaning.ghsl.is_none()) {
        bail!("settlement cleaning needs both footprints and ghsl rasters");
    }
    for raster in &config.inputs.rasters {
        for stat in &raster.stats {
            stat.parse::<Stat>().map_err(anyhow::Error::msg)?;
        }
    }
    Ok(())
}

fn checked(path: &Path) -> Result<&Path> {
    if !path.exists() {
        bail!("missing input: {}", path.display());
    }
    Ok(path)
}

fn load_raster(path: &Path, classes: Option<&[i64]>) -> Result<RasterLayer> {
    let layer = parse_raster(checked(path)?).with_context(|| format!("read {}", path.display()))?;
    match classes {
        Some(classes) => layer
            .into_categorical(classes.to_vec())
            .with_context(|| format!("legend of {}", path.display())),
        None => Ok(layer),
    }
}

impl ExperimentConfig {
    pub fn family(&self) -> Result<Family> {
        self.model.family.parse::<Family>().map_err(anyhow::Error::msg)
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        Ok(SplitSpec::new(
            self.split.train,
            self.split.val,
            self.split.test,
            self.split.seed,
        )?)
    }

    pub fn toggles(&self) -> CascadeToggles {
        CascadeToggles {
            keywords: self.cleaning.keywords,
            proximity: self.cleaning.proximity,
            name: self.cleaning.name,
            settlement: self.cleaning.settlement,
        }
    }

    pub fn load_schools(&self) -> Result<Vec<SchoolRecord>> {
        let path = &self.inputs.schools;
        parse_schools_csv(checked(path)?).with_context(|| format!("read {}", path.display()))
    }

    pub fn load_settlement_layers(&self) -> Result<Option<(RasterLayer, RasterLayer)>> {
        if !self.cleaning.settlement {
            return Ok(None);
        }
        // Presence of both paths is checked at config load.
        let footprints = load_raster(self.cleaning.footprints.as_ref().unwrap(), None)?;
        let ghsl = load_raster(self.cleaning.ghsl.as_ref().unwrap(), None)?;
        Ok(Some((footprints, ghsl)))
    }

    /// Loads every feature input named in the config.
    pub fn load_layers(&self) -> Result<LayerConfig> {
        let mut layers = LayerConfig::default();
        for input in &self.inputs.rasters {
            let layer = load_raster(&input.path, input.classes.as_deref())?;
            let stats: Vec<Stat> = input
                .stats
                .iter()
                .map(|s| s.parse::<Stat>().map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?;
            layers.rasters.push(RasterPlan {
                name: input.name.clone(),
                layer,
                stats,
            });
        }
        if let Some(path) = &self.inputs.grid {
            match parse_geojson(checked(path)?).with_context(|| format!("read {}", path.display()))? {
                VectorData::Lines(lines) => layers.grid = Some(lines),
                _ => bail!("expected line features in {}", path.display()),
            }
        }
        if let Some(path) = &self.inputs.tiles {
            match parse_geojson(checked(path)?).with_context(|| format!("read {}", path.display()))? {
                VectorData::Tiles(tiles) => layers.tiles = Some(tiles),
                _ => bail!("expected speed-test tiles in {}", path.display()),
            }
        }
        if let Some(path) = &self.inputs.admin {
            match parse_geojson(checked(path)?).with_context(|| format!("read {}", path.display()))? {
                VectorData::Zones(zones) => layers.admin = Some(zones),
                _ => bail!("expected zone polygons in {}", path.display()),
            }
        }
        for input in &self.inputs.population {
            layers
                .population
                .push((input.name.clone(), load_raster(&input.path, None)?));
        }
        Ok(layers)
    }

    /// The hyperparameter grid: explicit candidates when given, the stock
    /// grid for the family otherwise. Candidate tables omit the family
    /// tag and seed; both are injected here.
    pub fn grid(&self) -> Result<Vec<ModelConfig>> {
        let family = self.family()?;
        if self.model.candidates.is_empty() {
            return Ok(default_grid(family));
        }
        let mut grid = Vec::with_capacity(self.model.candidates.len());
        for (index, candidate) in self.model.candidates.iter().enumerate() {
            let mut table = candidate.clone();
            table.insert("family".to_string(), toml::Value::String(family.to_string()));
            table
                .entry("seed".to_string())
                .or_insert(toml::Value::Integer(0));
            let config: ModelConfig = table
                .try_into()
                .with_context(|| format!("model candidate {index}"))?;
            grid.push(config);
        }
        Ok(grid)
    }

    pub fn map_corners(&self) -> Result<Option<(GeoPoint, GeoPoint)>> {
        self.map.as_ref().map(MapWindow::corners).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!(
            r#"
[inputs]
schools = "schools.csv"

[features]
buffer_radius_m = 500.0

[model]
family = "tree"

[experiment]
n_runs = 2
output_dir = "out"
{extra}
"#
        )
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig = toml::from_str(&minimal("")).unwrap();
        validate(&config).unwrap();
        assert_eq!(config.split.seed, 42);
        assert!(config.cleaning.keywords);
        assert!(!config.cleaning.settlement);
        assert_eq!(config.model.cv_folds, 3);
        let grid = config.grid().unwrap();
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|c| c.family() == Family::Tree));
    }

    #[test]
    fn explicit_candidates_inherit_the_family() {
        let toml_text = minimal(
            r#"
[[model.candidates]]
max_depth = 4
min_samples_split = 2
min_samples_leaf = 1

[[model.candidates]]
max_depth = 2
min_samples_split = 2
min_samples_leaf = 1
"#,
        );
        let config: ExperimentConfig = toml::from_str(&toml_text).unwrap();
        let grid = config.grid().unwrap();
        assert_eq!(grid.len(), 2);
        assert!(matches!(grid[0], ModelConfig::Tree { max_depth: 4, .. }));
    }

    #[test]
    fn validation_catches_bad_fields() {
        let zero_radius = minimal("").replace("buffer_radius_m = 500.0", "buffer_radius_m = 0.0");
        let config: ExperimentConfig = toml::from_str(&zero_radius).unwrap();
        assert!(validate(&config).is_err());

        let zero_runs = minimal("").replace("n_runs = 2", "n_runs = 0");
        let config: ExperimentConfig = toml::from_str(&zero_runs).unwrap();
        assert!(validate(&config).is_err());

        let bad_family = minimal("").replace("family = \"tree\"", "family = \"xgboost\"");
        let config: ExperimentConfig = toml::from_str(&bad_family).unwrap();
        assert!(validate(&config).is_err());

        let settlement_without_layers = minimal("\n[cleaning]\nsettlement = true\n");
        let config: ExperimentConfig = toml::from_str(&settlement_without_layers).unwrap();
        assert!(validate(&config).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let toml_text = minimal("").replace("[features]", "[features]\nbogus = 1");
        assert!(toml::from_str::<ExperimentConfig>(&toml_text).is_err());
    }
}
