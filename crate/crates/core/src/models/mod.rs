//! Six classifier families trained from scratch, a shared artifact
//! format, and 5-fold grid-search selection.
//!
//! Trainers operate on an already-scaled feature table and are
//! deterministic under a fixed seed. The higher-level [`fit`] wires the
//! full pipeline: fit the scaler on the training table, scale, prune
//! correlated columns, train, and attach scaler plus retained columns to
//! the artifact so `predict` is self-contained.

mod grid;
mod linear;
mod mlp;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::{FeatError, FeatureTable};
use crate::preprocess::{
    correlation_prune, minmax_apply, minmax_fit, scale_value, PrepError, ScalerState,
    CORRELATION_THRESHOLD,
};

pub use grid::{default_grid, grid_search_cv, CandidateScore, GridSearchResult};
pub use linear::logreg_loss_grad;
pub use mlp::{loss_grad as mlp_loss_grad, MlpParams};
pub use tree::{Node, TreeState};

/// Artifact schema version; bump on layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training diverged to a non-finite loss")]
    NonFiniteLoss,
    #[error("class {class} has only {count} rows, need at least {required}")]
    DegenerateClass { class: u8, count: usize, required: usize },
    #[error("table has no labels")]
    MissingLabels,
    #[error("column {0} missing from table")]
    UnknownColumn(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("artifact schema version {found} unsupported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("malformed model artifact: {0}")]
    Artifact(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Feat(#[from] FeatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logreg,
    Tree,
    Rf,
    Gb,
    Linsvm,
    Mlp,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logreg => "logreg",
            Family::Tree => "tree",
            Family::Rf => "rf",
            Family::Gb => "gb",
            Family::Linsvm => "linsvm",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" => Ok(Family::Logreg),
            "tree" => Ok(Family::Tree),
            "rf" => Ok(Family::Rf),
            "gb" => Ok(Family::Gb),
            "linsvm" => Ok(Family::Linsvm),
            "mlp" => Ok(Family::Mlp),
            other => Err(ModelError::BadConfig(format!("unknown model family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Logistic,
    Tanh,
    Relu,
}

/// One model family plus its hyperparameters and training seed.
///
/// `max_features` counts candidate features per split as an absolute
/// number; values beyond the column count are clipped. The gradient
/// boosting family exposes `max_depth` and `subsample` so it can stand in
/// for both boosted-tree variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Logreg {
        penalty: Penalty,
        c: f64,
        seed: u64,
    },
    Tree {
        max_depth: usize,
        min_samples_split: usize,
        min_samples_leaf: usize,
        seed: u64,
    },
    Rf {
        n_estimators: usize,
        max_depth: usize,
        max_features: usize,
        min_samples_leaf: usize,
        min_samples_split: usize,
        seed: u64,
    },
    Gb {
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
        min_samples_split: usize,
        min_samples_leaf: usize,
        max_features: Option<usize>,
        subsample: f64,
        seed: u64,
    },
    Linsvm {
        c: f64,
        seed: u64,
    },
    Mlp {
        hidden_size: usize,
        activation: Activation,
        alpha: f64,
        learning_rate: f64,
        seed: u64,
    },
}

impl ModelConfig {
    pub fn family(&self) -> Family {
        match self {
            ModelConfig::Logreg { .. } => Family::Logreg,
            ModelConfig::Tree { .. } => Family::Tree,
            ModelConfig::Rf { .. } => Family::Rf,
            ModelConfig::Gb { .. } => Family::Gb,
            ModelConfig::Linsvm { .. } => Family::Linsvm,
            ModelConfig::Mlp { .. } => Family::Mlp,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Logreg { seed, .. }
            | ModelConfig::Tree { seed, .. }
            | ModelConfig::Rf { seed, .. }
            | ModelConfig::Gb { seed, .. }
            | ModelConfig::Linsvm { seed, .. }
            | ModelConfig::Mlp { seed, .. } => *seed,
        }
    }

    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut cfg = self.clone();
        match &mut cfg {
            ModelConfig::Logreg { seed, .. }
            | ModelConfig::Tree { seed, .. }
            | ModelConfig::Rf { seed, .. }
            | ModelConfig::Gb { seed, .. }
            | ModelConfig::Linsvm { seed, .. }
            | ModelConfig::Mlp { seed, .. } => *seed = new_seed,
        }
        cfg
    }
}

/// Fitted state. Trees are explicit node lists; boosting keeps raw Newton
/// leaf values and applies the learning rate at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Tree {
        tree: TreeState,
    },
    Forest {
        trees: Vec<TreeState>,
    },
    Boost {
        prior: f64,
        learning_rate: f64,
        trees: Vec<TreeState>,
    },
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Mlp {
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
        activation: Activation,
    },
}

/// A trained classifier plus everything `predict` needs: the scaler
/// fitted on training rows (if the pipeline scaled) and the input column
/// names in model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub config: ModelConfig,
    pub scaler: Option<ScalerState>,
    pub columns: Vec<String>,
    pub state: ModelState,
}

impl TrainedModel {
    /// Serializes to the versioned artifact document.
    pub fn to_artifact_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model state serializes") + "\n"
    }

    pub fn from_artifact_str(text: &str) -> Result<Self, ModelError> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: model.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_artifact_string()).map_err(|source| ModelError::Io {
            context: format!("writing model artifact {}", path.display()),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            context: format!("reading model artifact {}", path.display()),
            source,
        })?;
        Self::from_artifact_str(&text)
    }

    /// Pulls the model's input columns out of `table` by name, applying
    /// the stored scaler. Row-major, one row per table row.
    pub(crate) fn input_matrix(&self, table: &FeatureTable) -> Result<Vec<Vec<f64>>, ModelError> {
        let mut columns = Vec::with_capacity(self.columns.len());
        for name in &self.columns {
            let values = table
                .column(name)
                .ok_or_else(|| ModelError::UnknownColumn(name.clone()))?;
            let range = match &self.scaler {
                Some(scaler) => Some(
                    scaler
                        .range(name)
                        .ok_or_else(|| ModelError::UnknownColumn(name.clone()))?,
                ),
                None => None,
            };
            let scaled: Vec<f64> = match range {
                Some((min, max)) => values.iter().map(|&x| scale_value(x, min, max)).collect(),
                None => values.to_vec(),
            };
            columns.push(scaled);
        }
        let rows = (0..table.n_rows())
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        Ok(rows)
    }

    /// Probability of the connected class for one prepared row.
    pub(crate) fn forward(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::Tree { tree } => tree.predict_row(row),
            ModelState::Forest { trees } => {
                let votes = trees.iter().filter(|t| t.predict_row(row) > 0.5).count();
                votes as f64 / trees.len() as f64
            }
            ModelState::Boost {
                prior,
                learning_rate,
                trees,
            } => {
                let score: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
                sigmoid(prior + learning_rate * score)
            }
            ModelState::Linear { weights, bias } => sigmoid(dot(weights, row) + bias),
            ModelState::Mlp {
                w1,
                b1,
                w2,
                b2,
                activation,
            } => mlp::forward(w1, b1, w2, *b2, *activation, row),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major design matrix plus labels; errors when the table is
/// unlabeled.
pub(crate) fn design(table: &FeatureTable) -> Result<(Vec<Vec<f64>>, Vec<u8>), ModelError> {
    let labels = table.labels().ok_or(ModelError::MissingLabels)?;
    let x = (0..table.n_rows()).map(|i| table.row(i)).collect();
    Ok((x, labels.to_vec()))
}

fn checked_family(cfg: &ModelConfig, expected: Family) -> Result<(), ModelError> {
    if cfg.family() != expected {
        return Err(ModelError::BadConfig(format!(
            "expected a {expected} config, got {}",
            cfg.family()
        )));
    }
    Ok(())
}

fn assemble(table: &FeatureTable, config: &ModelConfig, state: ModelState) -> TrainedModel {
    TrainedModel {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        scaler: None,
        columns: table.column_names().iter().map(|s| s.to_string()).collect(),
        state,
    }
}

pub fn train_logreg(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Logreg)?;
    let (x, y) = design(table)?;
    let ModelConfig::Logreg { penalty, c, .. } = cfg else { unreachable!() };
    let lambda = match penalty {
        Penalty::L2 => 1.0 / c,
        Penalty::None => 0.0,
    };
    let (weights, bias) = linear::fit_logreg(&x, &y, lambda)?;
    Ok(assemble(table, cfg, ModelState::Linear { weights, bias }))
}

pub fn train_linsvm(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Linsvm)?;
    let (x, y) = design(table)?;
    let ModelConfig::Linsvm { c, .. } = cfg else { unreachable!() };
    let (weights, bias) = linear::fit_linsvm(&x, &y, 1.0 / c)?;
    Ok(assemble(table, cfg, ModelState::Linear { weights, bias }))
}

pub fn train_tree(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Tree)?;
    let (x, y) = design(table)?;
    let tree = tree::fit_tree(&x, &y, cfg)?;
    Ok(assemble(table, cfg, ModelState::Tree { tree }))
}

pub fn train_rf(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Rf)?;
    let (x, y) = design(table)?;
    let trees = tree::fit_forest(&x, &y, cfg)?;
    Ok(assemble(table, cfg, ModelState::Forest { trees }))
}

pub fn train_gb(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Gb)?;
    let (x, y) = design(table)?;
    let state = tree::fit_boost(&x, &y, cfg)?;
    Ok(assemble(table, cfg, state))
}

pub fn train_mlp(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    checked_family(cfg, Family::Mlp)?;
    let (x, y) = design(table)?;
    let state = mlp::fit(&x, &y, cfg)?;
    Ok(assemble(table, cfg, state))
}

/// Trains the family the config names on an already-prepared table.
pub fn train(table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    match cfg.family() {
        Family::Logreg => train_logreg(table, cfg),
        Family::Tree => train_tree(table, cfg),
        Family::Rf => train_rf(table, cfg),
        Family::Gb => train_gb(table, cfg),
        Family::Linsvm => train_linsvm(table, cfg),
        Family::Mlp => train_mlp(table, cfg),
    }
}

/// Full training pipeline on raw features: fit the scaler on this table,
/// scale, drop correlated columns, train, and attach scaler plus retained
/// columns to the artifact.
pub fn fit(train_table: &FeatureTable, cfg: &ModelConfig) -> Result<TrainedModel, ModelError> {
    let scaler = minmax_fit(train_table)?;
    let scaled = minmax_apply(&scaler, train_table)?;
    let retained = correlation_prune(&scaled, CORRELATION_THRESHOLD)?;
    let pruned = scaled.select_columns(&retained)?;
    let mut model = train(&pruned, cfg)?;
    model.scaler = Some(scaler);
    Ok(model)
}

/// Labels and connected-class probabilities for each row. Columns are
/// matched by name, so input column order is irrelevant; the stored
/// scaler is applied first and the decision threshold is 0.5. For the
/// margin-trained SVM the probability is the sigmoid of the margin, a
/// ranking score rather than a calibrated probability.
pub fn predict(model: &TrainedModel, table: &FeatureTable) -> Result<(Vec<u8>, Vec<f64>), ModelError> {
    let rows = model.input_matrix(table)?;
    let probabilities: Vec<f64> = rows.iter().map(|row| model.forward(row)).collect();
    let labels = probabilities.iter().map(|&p| u8::from(p > 0.5)).collect();
    Ok((labels, probabilities))
}

#[cfg(test)]
pub(crate) fn toy_table(x: Vec<Vec<f64>>, y: Vec<u8>) -> FeatureTable {
    let n = x.len();
    let d = x[0].len();
    let ids = (0..n).map(|i| format!("r{i:03}")).collect();
    let columns = (0..d)
        .map(|j| (format!("f{j}"), x.iter().map(|row| row[j]).collect()))
        .collect();
    FeatureTable::new(ids, columns, Some(y)).unwrap()
}
