//! Metrics, repeated-run aggregation, feature importance, and the
//! prediction-map export.
//!
//! The positive class is connected throughout: a false positive is a
//! school wrongly called connected, the costliest mistake for resource
//! allocation, so the false-positive rate is reported alongside accuracy
//! and F1.

use std::collections::BTreeMap;

use serde_json::json;

use crate::features::{FeatError, FeatureTable};
use crate::geodata::{GeoPoint, SchoolRecord};
use crate::models::{Family, ModelError, ModelState, TrainedModel};
use crate::preprocess::PrepError;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("confusion matrix has no entries")]
    EmptyMatrix,
    #[error("impurity importance needs a tree-family model, got {0}")]
    UnsupportedFamily(Family),
    #[error("table has no labels")]
    MissingLabels,
    #[error("need at least one run")]
    NoRuns,
    #[error("malformed metrics report: {0}")]
    BadReport(String),
    #[error("run {index}")]
    Run {
        index: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Feat(#[from] FeatError),
}

/// Counts over one evaluated set; positive class = connected. The
/// false-negative field carries a trailing underscore only because `fn`
/// is reserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(labels: &[u8], preds: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if labels.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            left: labels.len(),
            right: preds.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&label, &pred) in labels.iter().zip(preds) {
        match (label, pred) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// One run's metrics. A zero-denominator rate is reported as 0 and sets
/// `degenerate`, keeping report files numeric and machine-comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub f1: f64,
    pub fp_rate: f64,
    pub tp_rate: f64,
    pub fn_rate: f64,
    pub tn_rate: f64,
    pub degenerate: bool,
}

const METRIC_NAMES: [&str; 6] = ["accuracy", "f1", "fp_rate", "tp_rate", "fn_rate", "tn_rate"];

impl MetricsRow {
    fn values(&self) -> [f64; 6] {
        [
            self.accuracy,
            self.f1,
            self.fp_rate,
            self.tp_rate,
            self.fn_rate,
            self.tn_rate,
        ]
    }

    fn from_values(values: [f64; 6], degenerate: bool) -> Self {
        Self {
            accuracy: values[0],
            f1: values[1],
            fp_rate: values[2],
            tp_rate: values[3],
            fn_rate: values[4],
            tn_rate: values[5],
            degenerate,
        }
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsRow, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut degenerate = false;
    let mut rate = |numerator: usize, denominator: usize| -> f64 {
        if denominator == 0 {
            degenerate = true;
            0.0
        } else {
            numerator as f64 / denominator as f64
        }
    };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let f1 = rate(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    let fp_rate = rate(cm.fp, cm.fp + cm.tn);
    let tn_rate = rate(cm.tn, cm.fp + cm.tn);
    let tp_rate = rate(cm.tp, cm.tp + cm.fn_);
    let fn_rate = rate(cm.fn_, cm.tp + cm.fn_);
    Ok(MetricsRow {
        accuracy,
        f1,
        fp_rate,
        tp_rate,
        fn_rate,
        tn_rate,
        degenerate,
    })
}

/// Per-run rows plus their per-metric mean and population variance. The
/// aggregate rows' degeneracy flag is the OR over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub runs: Vec<MetricsRow>,
    pub mean: MetricsRow,
    pub variance: MetricsRow,
}

impl MetricsReport {
    pub fn from_runs(runs: Vec<MetricsRow>) -> Result<Self, EvalError> {
        if runs.is_empty() {
            return Err(EvalError::NoRuns);
        }
        let n = runs.len() as f64;
        let degenerate = runs.iter().any(|r| r.degenerate);
        let mut mean = [0.0; 6];
        for run in &runs {
            for (m, v) in mean.iter_mut().zip(run.values()) {
                *m += v / n;
            }
        }
        let mut variance = [0.0; 6];
        for run in &runs {
            for ((s, v), m) in variance.iter_mut().zip(run.values()).zip(mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        Ok(Self {
            runs,
            mean: MetricsRow::from_values(mean, degenerate),
            variance: MetricsRow::from_values(variance, degenerate),
        })
    }

    /// CSV with one row per run, then mean and variance rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("run,");
        out.push_str(&METRIC_NAMES.join(","));
        out.push_str(",degenerate\n");
        let mut line = |key: &str, row: &MetricsRow| {
            let values: Vec<String> = row.values().iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("{key},{},{}\n", values.join(","), row.degenerate));
        };
        for (index, run) in self.runs.iter().enumerate() {
            line(&index.to_string(), run);
        }
        line("mean", &self.mean);
        line("variance", &self.variance);
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| EvalError::BadReport("empty file".into()))?;
        let expected = format!("run,{},degenerate", METRIC_NAMES.join(","));
        if header != expected {
            return Err(EvalError::BadReport(format!("unexpected header {header}")));
        }
        let mut runs = Vec::new();
        let mut mean = None;
        let mut variance = None;
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(EvalError::BadReport(format!("expected 8 fields in {line}")));
            }
            let mut values = [0.0; 6];
            for (v, raw) in values.iter_mut().zip(&fields[1..7]) {
                *v = raw
                    .parse()
                    .map_err(|_| EvalError::BadReport(format!("bad number {raw}")))?;
            }
            let degenerate = match fields[7] {
                "true" => true,
                "false" => false,
                other => return Err(EvalError::BadReport(format!("bad flag {other}"))),
            };
            let row = MetricsRow::from_values(values, degenerate);
            match fields[0] {
                "mean" => mean = Some(row),
                "variance" => variance = Some(row),
                _ => runs.push(row),
            }
        }
        match (mean, variance) {
            (Some(mean), Some(variance)) if !runs.is_empty() => Ok(Self { runs, mean, variance }),
            _ => Err(EvalError::BadReport("missing run, mean or variance rows".into())),
        }
    }
}

/// Runs the experiment once per seed base_seed..base_seed+n-1 and
/// aggregates. A failed run is reported with its index.
pub fn repeated_runs<F>(mut experiment: F, n: usize, base_seed: u64) -> Result<MetricsReport, EvalError>
where
    F: FnMut(u64) -> Result<ConfusionMatrix, EvalError>,
{
    if n == 0 {
        return Err(EvalError::NoRuns);
    }
    let mut runs = Vec::with_capacity(n);
    for index in 0..n {
        let cm = experiment(base_seed + index as u64).map_err(|source| EvalError::Run {
            index,
            source: Box::new(source),
        })?;
        runs.push(metrics(&cm).map_err(|source| EvalError::Run {
            index,
            source: Box::new(source),
        })?);
    }
    MetricsReport::from_runs(runs)
}

/// Plain-text table in the published layout: one model per row, F1,
/// accuracy and FP-rate columns at two decimals.
pub fn render_metrics_table(rows: &[(String, MetricsRow)]) -> String {
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("model".len()))
        .max()
        .unwrap_or(5);
    let mut out = format!("{:<width$}  f1    acc   fp\n", "model");
    for (name, row) in rows {
        out.push_str(&format!(
            "{name:<width$}  {:.2}  {:.2}  {:.2}\n",
            row.f1, row.accuracy, row.fp_rate
        ));
    }
    out
}

fn importance_ranked(columns: &[String], scores: Vec<f64>) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = columns.iter().cloned().zip(scores).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

/// Impurity importance: each split's recorded gain is credited to its
/// feature, summed over all trees, normalized to sum 1. Ties keep column
/// order.
pub fn feature_importance(model: &TrainedModel) -> Result<Vec<(String, f64)>, EvalError> {
    let trees = match &model.state {
        ModelState::Tree { tree } => std::slice::from_ref(tree),
        ModelState::Forest { trees } => trees.as_slice(),
        ModelState::Boost { trees, .. } => trees.as_slice(),
        _ => return Err(EvalError::UnsupportedFamily(model.config.family())),
    };
    let mut scores = vec![0.0; model.columns.len()];
    for tree in trees {
        for node in &tree.nodes {
            if let crate::models::Node::Split { feature, gain, .. } = node {
                scores[*feature] += gain;
            }
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for score in scores.iter_mut() {
            *score /= total;
        }
    }
    Ok(importance_ranked(&model.columns, scores))
}

fn accuracy_of(model: &TrainedModel, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(row, &label)| u8::from(model.forward(row) > 0.5) == label)
        .count();
    correct as f64 / labels.len() as f64
}

/// Permutation importance: mean accuracy drop over n_repeats seeded
/// shuffles of one column at a time. A feature the model never reads
/// scores exactly 0.
pub fn permutation_importance(
    model: &TrainedModel,
    table: &FeatureTable,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>, EvalError> {
    if n_repeats == 0 {
        return Err(EvalError::NoRuns);
    }
    let labels = table.labels().ok_or(EvalError::MissingLabels)?;
    let matrix = model.input_matrix(table)?;
    let baseline = accuracy_of(model, &matrix, labels);

    let n = matrix.len();
    let mut scores = Vec::with_capacity(model.columns.len());
    for feature in 0..model.columns.len() {
        let mut drop_sum = 0.0;
        for repeat in 0..n_repeats {
            let stream = (feature * n_repeats + repeat) as u64;
            let mut rng = SplitMix64::new(derive_seed(seed, stream));
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            let permuted: Vec<Vec<f64>> = matrix
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut row = row.clone();
                    row[feature] = matrix[order[i]][feature];
                    row
                })
                .collect();
            drop_sum += baseline - accuracy_of(model, &permuted, labels);
        }
        scores.push(drop_sum / n_repeats as f64);
    }
    Ok(importance_ranked(&model.columns, scores))
}

fn outcome(label: u8, pred: u8) -> &'static str {
    match (label, pred) {
        (1, 1) => "TP",
        (0, 1) => "FP",
        (1, 0) => "FN",
        _ => "TN",
    }
}

/// GeoJSON FeatureCollection of school points with predictions and,
/// when labels are given, the actual label and TP/FP/FN/TN outcome. An
/// optional bounding box (south-west, north-east) keeps only schools
/// inside it, boundary inclusive.
pub fn export_prediction_map(
    schools: &[SchoolRecord],
    preds: &[u8],
    labels: Option<&[u8]>,
    bbox: Option<(GeoPoint, GeoPoint)>,
) -> Result<String, EvalError> {
    if schools.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            left: schools.len(),
            right: preds.len(),
        });
    }
    if let Some(labels) = labels {
        if labels.len() != schools.len() {
            return Err(EvalError::LengthMismatch {
                left: schools.len(),
                right: labels.len(),
            });
        }
    }
    let yes_no = |v: u8| if v == 1 { "yes" } else { "no" };
    let mut features = Vec::new();
    for (index, school) in schools.iter().enumerate() {
        if let Some((min, max)) = bbox {
            let inside = (min.lon..=max.lon).contains(&school.location.lon)
                && (min.lat..=max.lat).contains(&school.location.lat);
            if !inside {
                continue;
            }
        }
        let mut properties = BTreeMap::new();
        properties.insert("id".to_string(), json!(school.id));
        properties.insert("predicted".to_string(), json!(yes_no(preds[index])));
        if let Some(labels) = labels {
            properties.insert("actual".to_string(), json!(yes_no(labels[index])));
            properties.insert("outcome".to_string(), json!(outcome(labels[index], preds[index])));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [school.location.lon, school.location.lat],
            },
            "properties": properties,
        }));
    }
    let document = json!({
        "type": "FeatureCollection",
        "features": features,
    });
    Ok(serde_json::to_string_pretty(&document).expect("json value serializes") + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ModelConfig, Penalty};
    use approx::assert_abs_diff_eq;

    #[test]
    fn confusion_reference_cases() {
        let cm = confusion(&[1, 1, 1, 0], &[1, 0, 1, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 1, fn_: 1, tn: 0 });

        let all_correct = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(all_correct.fp + all_correct.fn_, 0);
        assert_eq!(all_correct.total(), 3);

        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionMatrix::default());
        assert!(matches!(
            confusion(&[1], &[1, 0]),
            Err(EvalError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn metrics_reference_values() {
        let row = metrics(&ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 }).unwrap();
        assert_abs_diff_eq!(row.accuracy, 0.7);
        assert_abs_diff_eq!(row.f1, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row.fp_rate, 0.2);
        assert_abs_diff_eq!(row.tp_rate, 0.6);
        assert!(!row.degenerate);

        let perfect = metrics(&ConfusionMatrix { tp: 5, fp: 0, fn_: 0, tn: 5 }).unwrap();
        assert_eq!((perfect.accuracy, perfect.f1, perfect.fp_rate), (1.0, 1.0, 0.0));

        // All-negative truth: the positive rates have no denominator.
        let row = metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 4 }).unwrap();
        assert!(row.degenerate);
        assert_eq!(row.tp_rate, 0.0);

        assert!(matches!(metrics(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix)));
    }

    #[test]
    fn rate_sums_hold_when_denominators_exist() {
        let mut rng = SplitMix64::new(40);
        for _ in 0..500 {
            let cm = ConfusionMatrix {
                tp: rng.gen_index(20),
                fp: rng.gen_index(20),
                fn_: rng.gen_index(20),
                tn: rng.gen_index(20),
            };
            if cm.total() == 0 {
                continue;
            }
            let row = metrics(&cm).unwrap();
            if cm.tp + cm.fn_ > 0 {
                assert_abs_diff_eq!(row.tp_rate + row.fn_rate, 1.0, epsilon = 1e-12);
            }
            if cm.fp + cm.tn > 0 {
                assert_abs_diff_eq!(row.fp_rate + row.tn_rate, 1.0, epsilon = 1e-12);
            }
            assert_eq!(cm.tp + cm.fp + cm.fn_ + cm.tn, cm.total());
        }
    }

    #[test]
    fn published_fixture_renders_at_two_decimals() {
        let row = metrics(&ConfusionMatrix { tp: 86, fp: 11, fn_: 29, tn: 74 }).unwrap();
        let table = render_metrics_table(&[("xgb".to_string(), row)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "model  f1    acc   fp");
        assert_eq!(lines[1], "xgb    0.81  0.80  0.13");
    }

    #[test]
    fn repeated_runs_aggregate_and_propagate_failures() {
        // Deterministic experiment: identical rows, zero variance.
        let report = repeated_runs(
            |_seed| Ok(ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 }),
            5,
            100,
        )
        .unwrap();
        assert_eq!(report.runs.len(), 5);
        assert_abs_diff_eq!(report.mean.accuracy, 0.7);
        assert_eq!(report.variance.values(), [0.0; 6]);

        // Seed-dependent experiment: variance matches recomputation.
        let report = repeated_runs(
            |seed| {
                Ok(ConfusionMatrix {
                    tp: 3 + (seed % 3) as usize,
                    fp: 1,
                    fn_: 2,
                    tn: 4,
                })
            },
            5,
            100,
        )
        .unwrap();
        let n = report.runs.len() as f64;
        let mean = report.runs.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let variance = report.runs.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
        assert_abs_diff_eq!(report.mean.accuracy, mean, epsilon = 1e-12);
        assert_abs_diff_eq!(report.variance.accuracy, variance, epsilon = 1e-12);
        assert!(report.variance.accuracy > 0.0);

        let failure = repeated_runs(
            |seed| {
                if seed == 102 {
                    Err(EvalError::MissingLabels)
                } else {
                    Ok(ConfusionMatrix { tp: 1, fp: 0, fn_: 0, tn: 1 })
                }
            },
            5,
            100,
        );
        assert!(matches!(failure, Err(EvalError::Run { index: 2, .. })));
    }

    #[test]
    fn report_csv_round_trips() {
        let rows = vec![
            metrics(&ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 }).unwrap(),
            metrics(&ConfusionMatrix { tp: 5, fp: 2, fn_: 1, tn: 3 }).unwrap(),
        ];
        let report = MetricsReport::from_runs(rows).unwrap();
        let text = report.to_csv_string();
        assert!(text.starts_with("run,accuracy,f1,fp_rate,tp_rate,fn_rate,tn_rate,degenerate\n"));
        let parsed = MetricsReport::from_csv_str(&text).unwrap();
        assert_eq!(parsed, report);
    }

    fn planted_table() -> FeatureTable {
        let mut rng = SplitMix64::new(12);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..80 {
            let decisive = rng.next_f64();
            x.push(vec![decisive, rng.next_f64(), rng.next_f64()]);
            y.push(u8::from(decisive > 0.5));
        }
        crate::models::toy_table(x, y)
    }

    #[test]
    fn decisive_feature_ranks_first_under_both_importances() {
        let table = planted_table();
        let cfg = ModelConfig::Rf {
            n_estimators: 20,
            max_depth: 6,
            max_features: 2,
            min_samples_leaf: 1,
            min_samples_split: 2,
            seed: 5,
        };
        let model = fit(&table, &cfg).unwrap();

        let impurity = feature_importance(&model).unwrap();
        assert_eq!(impurity[0].0, "f0");
        let total: f64 = impurity.iter().map(|(_, s)| s).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

        let permutation = permutation_importance(&model, &table, 5, 9).unwrap();
        assert_eq!(permutation[0].0, "f0");
        assert!(permutation[0].1 > 0.2);
    }

    #[test]
    fn importance_rejects_non_tree_models_and_ignores_unused_features() {
        let table = planted_table();
        let linear = fit(
            &table,
            &ModelConfig::Logreg {
                penalty: Penalty::L2,
                c: 1.0,
                seed: 0,
            },
        )
        .unwrap();
        assert!(matches!(
            feature_importance(&linear),
            Err(EvalError::UnsupportedFamily(Family::Logreg))
        ));

        // A stump on f0 never reads the other columns.
        let stump = fit(
            &table,
            &ModelConfig::Tree {
                max_depth: 1,
                min_samples_split: 2,
                min_samples_leaf: 1,
                seed: 0,
            },
        )
        .unwrap();
        let permutation = permutation_importance(&stump, &table, 3, 4).unwrap();
        let unused: Vec<&(String, f64)> = permutation.iter().filter(|(n, _)| n != "f0").collect();
        assert_eq!(unused.len(), 2);
        for (_, score) in unused {
            assert_eq!(*score, 0.0);
        }
    }

    fn school(id: &str, lon: f64, lat: f64) -> SchoolRecord {
        SchoolRecord::new(id, "School", GeoPoint::new(lon, lat).unwrap(), None)
    }

    #[test]
    fn prediction_map_reparses_to_the_input_points() {
        let schools = vec![
            school("a", 30.05, -1.95),
            school("b", 30.50, -2.50),
            school("c", 30.10, -1.94),
        ];
        let preds = vec![1, 0, 1];
        let labels = vec![1, 1, 0];
        let text = export_prediction_map(&schools, &preds, Some(&labels), None).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["type"], "FeatureCollection");
        let features = value["features"].as_array().unwrap();
        assert_eq!(features.len(), 3);
        for (feature, school) in features.iter().zip(&schools) {
            assert_eq!(feature["geometry"]["type"], "Point");
            let coords = feature["geometry"]["coordinates"].as_array().unwrap();
            assert_eq!(coords[0].as_f64().unwrap(), school.location.lon);
            assert_eq!(coords[1].as_f64().unwrap(), school.location.lat);
            assert_eq!(feature["properties"]["id"], json!(school.id));
        }
        assert_eq!(features[0]["properties"]["outcome"], "TP");
        assert_eq!(features[1]["properties"]["outcome"], "FN");
        assert_eq!(features[2]["properties"]["outcome"], "FP");
    }

    #[test]
    fn bbox_keeps_only_schools_inside_the_window() {
        let schools = vec![
            school("inside", 30.05, -1.95),
            school("outside", 30.50, -2.50),
        ];
        let window = (
            GeoPoint::new(30.02, -2.01).unwrap(),
            GeoPoint::new(30.11, -1.93).unwrap(),
        );
        let text = export_prediction_map(&schools, &[1, 1], None, Some(window)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let features = value["features"].as_array().unwrap();
        assert_eq!(features.len(), 1);
        assert_eq!(features[0]["properties"]["id"], "inside");
        // Without labels there is no outcome.
        assert!(features[0]["properties"].get("outcome").is_none());
        assert!(features[0]["properties"].get("actual").is_none());
    }

    #[test]
    fn prediction_map_checks_lengths() {
        let schools = vec![school("a", 0.0, 0.0)];
        assert!(matches!(
            export_prediction_map(&schools, &[1, 0], None, None),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            export_prediction_map(&schools, &[1], Some(&[1, 0]), None),
            Err(EvalError::LengthMismatch { .. })
        ));
    }
}
