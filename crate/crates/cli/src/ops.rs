//! Stage implementations behind the subcommands.
//!
//! Each stage reads its inputs from the output directory of the previous
//! one, so `clean -> featurize -> train -> evaluate` composes; the
//! `run-experiment` command drives the same functions in memory and
//! writes byte-identical files, because every file format round-trips
//! floats exactly.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use schoolconn::cleaning::clean_cascade;
use schoolconn::eval::{
    confusion, export_prediction_map, repeated_runs, EvalError, MetricsReport,
};
use schoolconn::features::{build_feature_table, merge_embeddings, BufferSpec, FeatureTable};
use schoolconn::geodata::{parse_schools_csv, write_schools_csv, Connectivity, SchoolRecord};
use schoolconn::models::{fit, grid_search_cv, predict, GridSearchResult, ModelConfig, TrainedModel};
use schoolconn::preprocess::{stratified_split, SplitSpec};
use schoolconn::rng::derive_seed;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, LoadedConfig};

/// Buffer radii of the sweep run, in meters.
pub const SWEEP_RADII_M: [f64; 5] = [300.0, 500.0, 750.0, 1000.0, 5000.0];

/// File layout under the output directory.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(config: &ExperimentConfig) -> Result<Self> {
        let root = config.experiment.output_dir.clone();
        fs::create_dir_all(&root).with_context(|| format!("create {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn cleaned(&self) -> PathBuf {
        self.root.join("cleaned.csv")
    }

    pub fn cleaning_report(&self) -> PathBuf {
        self.root.join("cleaning_report.txt")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features.csv")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }

    pub fn grid_report(&self) -> PathBuf {
        self.root.join("grid_report.json")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn metrics_for_radius(&self, radius_m: f64) -> PathBuf {
        self.root.join(format!("metrics_r{}.csv", radius_m as u64))
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.csv")
    }

    pub fn map(&self) -> PathBuf {
        self.root.join("map.geojson")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read_existing<T>(path: &Path, parse: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
    if !path.exists() {
        bail!("missing input: {}", path.display());
    }
    parse(path)
}

/// Runs the cleaning cascade in memory.
fn clean_schools(config: &ExperimentConfig) -> Result<(Vec<SchoolRecord>, String)> {
    let schools = config.load_schools()?;
    let layers = config.load_settlement_layers()?;
    let (cleaned, report) = clean_cascade(&schools, config.toggles(), layers.as_ref().map(|(f, g)| (f, g)));
    Ok((cleaned, report.render()))
}

/// Builds the feature table for `schools` at the given radius, merging
/// embeddings when configured.
fn featurize_schools(
    config: &ExperimentConfig,
    schools: &[SchoolRecord],
    radius_m: f64,
) -> Result<FeatureTable> {
    let layers = config.load_layers()?;
    let spec = BufferSpec::new(radius_m).map_err(|e| anyhow::anyhow!("buffer radius: {e}"))?;
    let table = build_feature_table(schools, &layers, spec)?;
    match &config.inputs.embeddings {
        Some(path) => {
            if !path.exists() {
                bail!("missing input: {}", path.display());
            }
            Ok(merge_embeddings(&table, path)?)
        }
        None => Ok(table),
    }
}

/// Grid search on the training split, then a final fit of the winner.
/// The candidate search seeds derive from the root seed; the final model
/// trains under the root seed itself, making it identical to evaluation
/// run 0.
fn tune_and_fit(
    config: &ExperimentConfig,
    table: &FeatureTable,
) -> Result<(GridSearchResult, TrainedModel)> {
    let spec = config.split_spec()?;
    let (train, _, _) = stratified_split(table, &spec)?;
    let search = grid_search_cv(
        &train,
        config.family()?,
        &config.grid()?,
        config.model.cv_folds,
        derive_seed(config.split.seed, 1),
    )?;
    let model = fit(&train, &search.best.with_seed(config.split.seed))?;
    Ok((search, model))
}

/// One evaluation run per seed root..root+n_runs-1: re-split, refit the
/// tuned config, score the held-out test split.
fn evaluation_report(
    config: &ExperimentConfig,
    table: &FeatureTable,
    tuned: &ModelConfig,
) -> Result<MetricsReport> {
    let fractions = (config.split.train, config.split.val, config.split.test);
    let report = repeated_runs(
        |seed| -> Result<_, EvalError> {
            let spec = SplitSpec::new(fractions.0, fractions.1, fractions.2, seed)?;
            let (train, _, test) = stratified_split(table, &spec)?;
            let model = fit(&train, &tuned.with_seed(seed))?;
            let (preds, _) = predict(&model, &test)?;
            let truth = test.labels().ok_or(EvalError::MissingLabels)?;
            confusion(truth, &preds)
        },
        config.experiment.n_runs,
        config.split.seed,
    )?;
    Ok(report)
}

fn labels_of(schools: &[SchoolRecord]) -> Option<Vec<u8>> {
    schools
        .iter()
        .map(|s| s.label.map(|l| u8::from(l == Connectivity::Connected)))
        .collect()
}

pub(crate) fn predictions_csv(schools: &[SchoolRecord], preds: &[u8], probs: &[f64]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["id", "predicted", "probability"])?;
    for ((school, &pred), &prob) in schools.iter().zip(preds).zip(probs) {
        let label = if pred == 1 { "yes" } else { "no" };
        writer.write_record([school.id.as_str(), label, &format!("{prob}")])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

pub(crate) fn parse_predictions_csv(text: &str, origin: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("id") || headers.get(1) != Some("predicted") {
        bail!("unexpected columns in {}", origin.display());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(0).unwrap_or_default().to_string();
        let pred = match record.get(1) {
            Some("yes") => 1,
            Some("no") => 0,
            other => bail!(
                "bad prediction {:?} for {} in {}",
                other.unwrap_or_default(),
                id,
                origin.display()
            ),
        };
        rows.push((id, pred));
    }
    Ok(rows)
}

pub fn cmd_clean(loaded: &LoadedConfig, report_path: Option<&Path>) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let (cleaned, report) = clean_schools(config)?;
    write_schools_csv(out.cleaned(), &cleaned).with_context(|| format!("write {}", out.cleaned().display()))?;
    println!("wrote {}", out.cleaned().display());
    let report_path = report_path.map(Path::to_path_buf).unwrap_or_else(|| out.cleaning_report());
    write_text(&report_path, &report)
}

pub fn cmd_featurize(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let schools = read_existing(&out.cleaned(), |p| Ok(parse_schools_csv(p)?))?;
    let table = featurize_schools(config, &schools, config.features.buffer_radius_m)?;
    table
        .write_csv(out.features())
        .with_context(|| format!("write {}", out.features().display()))?;
    println!("wrote {}", out.features().display());
    Ok(())
}

pub fn cmd_train(loaded: &LoadedConfig, report_path: Option<&Path>) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let table = read_existing(&out.features(), |p| Ok(FeatureTable::read_csv(p)?))?;
    let (search, model) = tune_and_fit(config, &table)?;
    model
        .save(&out.model())
        .with_context(|| format!("write {}", out.model().display()))?;
    println!("wrote {}", out.model().display());
    let report_path = report_path.map(Path::to_path_buf).unwrap_or_else(|| out.grid_report());
    let report = serde_json::to_string_pretty(&search).expect("grid report serializes") + "\n";
    write_text(&report_path, &report)
}

pub fn cmd_evaluate(loaded: &LoadedConfig, report_path: Option<&Path>) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let table = read_existing(&out.features(), |p| Ok(FeatureTable::read_csv(p)?))?;
    let model = read_existing(&out.model(), |p| Ok(TrainedModel::load(p)?))?;
    let report = evaluation_report(config, &table, &model.config)?;
    let report_path = report_path.map(Path::to_path_buf).unwrap_or_else(|| out.metrics());
    write_text(&report_path, &report.to_csv_string())
}

pub fn cmd_predict(
    loaded: &LoadedConfig,
    model_path: Option<&Path>,
    schools_path: Option<&Path>,
) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let model_path = model_path.map(Path::to_path_buf).unwrap_or_else(|| out.model());
    let schools_path = schools_path.map(Path::to_path_buf).unwrap_or_else(|| out.cleaned());
    let model = read_existing(&model_path, |p| Ok(TrainedModel::load(p)?))?;
    let schools = read_existing(&schools_path, |p| Ok(parse_schools_csv(p)?))?;
    let table = featurize_schools(config, &schools, config.features.buffer_radius_m)?;
    let (preds, probs) = predict(&model, &table)?;
    write_text(&out.predictions(), &predictions_csv(&schools, &preds, &probs)?)
}

pub fn cmd_export_map(
    loaded: &LoadedConfig,
    predictions_path: Option<&Path>,
    schools_path: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;
    let predictions_path = predictions_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.predictions());
    let schools_path = schools_path.map(Path::to_path_buf).unwrap_or_else(|| out.cleaned());
    let schools = read_existing(&schools_path, |p| Ok(parse_schools_csv(p)?))?;
    let rows = read_existing(&predictions_path, |p| {
        let text = fs::read_to_string(p).with_context(|| format!("read {}", p.display()))?;
        parse_predictions_csv(&text, p)
    })?;
    if rows.len() != schools.len() || rows.iter().zip(&schools).any(|((id, _), s)| id != &s.id) {
        bail!(
            "{} does not match {}",
            predictions_path.display(),
            schools_path.display()
        );
    }
    let preds: Vec<u8> = rows.iter().map(|(_, p)| *p).collect();
    let labels = labels_of(&schools);
    let text = export_prediction_map(&schools, &preds, labels.as_deref(), config.map_corners()?)?;
    let report_path = report_path.map(Path::to_path_buf).unwrap_or_else(|| out.map());
    write_text(&report_path, &text)
}

pub fn cmd_run_experiment(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let out = OutDir::create(config)?;

    let (cleaned, cleaning_report) = clean_schools(config)?;
    write_schools_csv(out.cleaned(), &cleaned).with_context(|| format!("write {}", out.cleaned().display()))?;
    println!("wrote {}", out.cleaned().display());
    write_text(&out.cleaning_report(), &cleaning_report)?;

    let table = featurize_schools(config, &cleaned, config.features.buffer_radius_m)?;
    table
        .write_csv(out.features())
        .with_context(|| format!("write {}", out.features().display()))?;
    println!("wrote {}", out.features().display());

    let (search, model) = tune_and_fit(config, &table)?;
    model
        .save(&out.model())
        .with_context(|| format!("write {}", out.model().display()))?;
    println!("wrote {}", out.model().display());
    write_text(
        &out.grid_report(),
        &(serde_json::to_string_pretty(&search).expect("grid report serializes") + "\n"),
    )?;

    let report = evaluation_report(config, &table, &model.config)?;
    write_text(&out.metrics(), &report.to_csv_string())?;

    let (preds, probs) = predict(&model, &table)?;
    write_text(&out.predictions(), &predictions_csv(&cleaned, &preds, &probs)?)?;

    let labels = labels_of(&cleaned);
    let map_text = export_prediction_map(&cleaned, &preds, labels.as_deref(), config.map_corners()?)?;
    write_text(&out.map(), &map_text)?;

    for radius_m in SWEEP_RADII_M {
        let sweep_table = featurize_schools(config, &cleaned, radius_m)?;
        let sweep_report = evaluation_report(config, &sweep_table, &model.config)?;
        write_text(&out.metrics_for_radius(radius_m), &sweep_report.to_csv_string())?;
    }

    write_text(&out.manifest(), &manifest_json(loaded))
}

/// Everything needed to reproduce the run: the config itself, its hash,
/// the effective seed, and the code versions.
fn manifest_json(loaded: &LoadedConfig) -> String {
    let config = &loaded.config;
    let digest = Sha256::digest(loaded.raw.as_bytes());
    let value = serde_json::json!({
        "command": "run-experiment",
        "config": loaded.raw,
        "config_sha256": format!("{digest:x}"),
        "seed": config.split.seed,
        "n_runs": config.experiment.n_runs,
        "buffer_radius_m": config.features.buffer_radius_m,
        "sweep_radii_m": SWEEP_RADII_M,
        "versions": {
            "schoolconn": schoolconn::VERSION,
            "schoolconn-cli": env!("CARGO_PKG_VERSION"),
            "model_artifact_schema": schoolconn::models::SCHEMA_VERSION,
        },
    });
    serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use schoolconn::geodata::GeoPoint;

    #[test]
    fn predictions_csv_round_trips() {
        let schools = vec![
            SchoolRecord::new("a", "A", GeoPoint::new(30.0, -2.0).unwrap(), None),
            SchoolRecord::new("b,with comma", "B", GeoPoint::new(30.1, -2.1).unwrap(), None),
        ];
        let text = predictions_csv(&schools, &[1, 0], &[0.75, 0.25]).unwrap();
        let rows = parse_predictions_csv(&text, Path::new("test.csv")).unwrap();
        assert_eq!(
            rows,
            vec![("a".to_string(), 1), ("b,with comma".to_string(), 0)]
        );
    }

    #[test]
    fn metrics_file_names_embed_the_radius() {
        let out = OutDir {
            root: PathBuf::from("out"),
        };
        assert_eq!(out.metrics_for_radius(300.0), PathBuf::from("out/metrics_r300.csv"));
        assert_eq!(out.metrics_for_radius(5000.0), PathBuf::from("out/metrics_r5000.csv"));
    }
}
