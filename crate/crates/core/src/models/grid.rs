//! Exhaustive hyperparameter search over a candidate grid, scored by
//! stratified k-fold cross-validation.

use serde::{Deserialize, Serialize};

use crate::features::FeatureTable;
use crate::models::{predict, train, Activation, Family, ModelConfig, ModelError, Penalty};
use crate::rng::{derive_seed, SplitMix64};

/// One candidate's cross-validated means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub config: ModelConfig,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
}

impl CandidateScore {
    /// Selection score: combined F1 and accuracy.
    pub fn score(&self) -> f64 {
        self.mean_accuracy + self.mean_f1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ModelConfig,
    pub candidates: Vec<CandidateScore>,
}

/// The stock search space for each family. Gradient boosting stands in
/// for both boosted-tree variants: the stock grid fixes depth 3 and no
/// subsampling, and custom grids can sweep eta, max_depth and subsample.
pub fn default_grid(family: Family) -> Vec<ModelConfig> {
    let mut grid = Vec::new();
    match family {
        Family::Logreg => {
            for penalty in [Penalty::L2, Penalty::None] {
                for c in [0.01, 0.1, 1.0] {
                    grid.push(ModelConfig::Logreg { penalty, c, seed: 0 });
                }
            }
        }
        Family::Tree => {
            for max_depth in [5, 10, 20] {
                for min_samples_split in [2, 4, 8] {
                    for min_samples_leaf in [1, 3, 5] {
                        grid.push(ModelConfig::Tree {
                            max_depth,
                            min_samples_split,
                            min_samples_leaf,
                            seed: 0,
                        });
                    }
                }
            }
        }
        Family::Rf => {
            for max_depth in [80, 90, 100] {
                for max_features in [2, 3, 4] {
                    for min_samples_leaf in [3, 4, 5] {
                        for min_samples_split in [4, 6, 8] {
                            for n_estimators in [100, 200, 300, 500] {
                                grid.push(ModelConfig::Rf {
                                    n_estimators,
                                    max_depth,
                                    max_features,
                                    min_samples_leaf,
                                    min_samples_split,
                                    seed: 0,
                                });
                            }
                        }
                    }
                }
            }
        }
        Family::Gb => {
            for learning_rate in [0.05, 0.1, 0.5, 1.0] {
                for n_estimators in [100, 200, 300] {
                    for min_samples_split in [2, 4, 6] {
                        for min_samples_leaf in [1, 3, 5] {
                            grid.push(ModelConfig::Gb {
                                n_estimators,
                                learning_rate,
                                max_depth: 3,
                                min_samples_split,
                                min_samples_leaf,
                                max_features: None,
                                subsample: 1.0,
                                seed: 0,
                            });
                        }
                    }
                }
            }
        }
        Family::Linsvm => {
            for c in [0.001, 0.01, 0.1, 1.0, 10.0] {
                grid.push(ModelConfig::Linsvm { c, seed: 0 });
            }
        }
        Family::Mlp => {
            for hidden_size in [100, 150, 200] {
                for activation in [Activation::Logistic, Activation::Tanh, Activation::Relu] {
                    for alpha in [0.0001, 0.005, 0.001] {
                        grid.push(ModelConfig::Mlp {
                            hidden_size,
                            activation,
                            alpha,
                            learning_rate: 0.05,
                            seed: 0,
                        });
                    }
                }
            }
        }
    }
    grid
}

/// Stratified fold assignment, one fold id per row. Within each class the
/// rows are shuffled with a class-derived seed, fold sizes are the floor
/// share with the remainder spread over the leading folds, the same
/// counting rule the train/validation/test split uses.
fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, ModelError> {
    let mut fold_of = vec![0usize; labels.len()];
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < k {
            return Err(ModelError::DegenerateClass {
                class,
                count: rows.len(),
                required: k,
            });
        }
        let mut rng = SplitMix64::new(derive_seed(seed, class as u64));
        rng.shuffle(&mut rows);
        let base = rows.len() / k;
        let extras = rows.len() % k;
        let mut at = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extras);
            for &row in &rows[at..at + size] {
                fold_of[row] = fold;
            }
            at += size;
        }
    }
    Ok(fold_of)
}

fn fold_metrics(truth: &[u8], predicted: &[u8]) -> (f64, f64) {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    let mut correct = 0usize;
    for (&t, &p) in truth.iter().zip(predicted) {
        correct += usize::from(t == p);
        match (t, p) {
            (1, 1) => tp += 1.0,
            (0, 1) => fp += 1.0,
            (1, 0) => fn_ += 1.0,
            _ => {}
        }
    }
    let accuracy = correct as f64 / truth.len() as f64;
    let f1 = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
    (accuracy, f1)
}

/// Trains every grid candidate k times on stratified folds and returns
/// per-candidate mean accuracy and F1. The best candidate maximizes
/// their sum; ties keep the earliest grid position. Candidate i trains
/// under a seed derived from (seed, i), so candidates could run
/// concurrently and still match this sequential result.
pub fn grid_search_cv(
    table: &FeatureTable,
    family: Family,
    grid: &[ModelConfig],
    k: usize,
    seed: u64,
) -> Result<GridSearchResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::BadConfig("empty hyperparameter grid".into()));
    }
    if let Some(other) = grid.iter().find(|cfg| cfg.family() != family) {
        return Err(ModelError::BadConfig(format!(
            "grid for {family} contains a {} config",
            other.family()
        )));
    }
    if k < 2 {
        return Err(ModelError::BadConfig(format!("need at least 2 folds, got {k}")));
    }
    let labels = table.labels().ok_or(ModelError::MissingLabels)?;
    let fold_of = stratified_folds(labels, k, seed)?;

    let mut candidates = Vec::with_capacity(grid.len());
    for (index, candidate) in grid.iter().enumerate() {
        let config = candidate.with_seed(derive_seed(seed, index as u64));
        let mut accuracy_sum = 0.0;
        let mut f1_sum = 0.0;
        for fold in 0..k {
            let train_rows: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
            let held_out: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
            let model = train(&table.select_rows(&train_rows), &config)?;
            let held_table = table.select_rows(&held_out);
            let (predicted, _) = predict(&model, &held_table)?;
            let truth: Vec<u8> = held_out.iter().map(|&i| labels[i]).collect();
            let (accuracy, f1) = fold_metrics(&truth, &predicted);
            accuracy_sum += accuracy;
            f1_sum += f1;
        }
        candidates.push(CandidateScore {
            config,
            mean_accuracy: accuracy_sum / k as f64,
            mean_f1: f1_sum / k as f64,
        });
    }

    let mut best_index = 0;
    for (index, candidate) in candidates.iter().enumerate().skip(1) {
        if candidate.score() > candidates[best_index].score() {
            best_index = index;
        }
    }
    let best = candidates[best_index].config.clone();
    Ok(GridSearchResult { best, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::toy_table;
    use crate::rng::SplitMix64;

    fn planted(n: usize, seed: u64) -> FeatureTable {
        let mut rng = SplitMix64::new(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a = rng.next_f64();
            x.push(vec![a, rng.next_f64()]);
            y.push(u8::from(a > 0.5));
        }
        toy_table(x, y)
    }

    #[test]
    fn folds_partition_each_class_evenly() {
        let labels: Vec<u8> = (0..23).map(|i| u8::from(i % 3 == 0)).collect();
        let fold_of = stratified_folds(&labels, 5, 11).unwrap();
        for class in [0u8, 1u8] {
            let mut per_fold = [0usize; 5];
            for i in 0..labels.len() {
                if labels[i] == class {
                    per_fold[fold_of[i]] += 1;
                }
            }
            let total: usize = per_fold.iter().sum();
            let base = total / 5;
            for (fold, &count) in per_fold.iter().enumerate() {
                let expected = base + usize::from(fold < total % 5);
                assert_eq!(count, expected, "class {class} fold {fold}");
            }
        }
    }

    #[test]
    fn tiny_class_is_degenerate() {
        let labels = vec![1, 1, 1, 0, 0, 0, 0, 0, 0];
        assert!(matches!(
            stratified_folds(&labels, 5, 0),
            Err(ModelError::DegenerateClass { class: 1, count: 3, required: 5 })
        ));
    }

    #[test]
    fn single_point_grid_returns_that_config() {
        let table = planted(30, 1);
        let grid = vec![ModelConfig::Tree {
            max_depth: 3,
            min_samples_split: 2,
            min_samples_leaf: 1,
            seed: 0,
        }];
        let result = grid_search_cv(&table, Family::Tree, &grid, 5, 9).unwrap();
        assert_eq!(result.candidates.len(), 1);
        assert_eq!(result.best, result.candidates[0].config);
        assert_eq!(result.best.family(), Family::Tree);
    }

    #[test]
    fn better_candidate_wins_on_planted_data() {
        let table = planted(60, 2);
        // A stump cannot be worse than depth 0; a real tree beats a
        // majority-only tree (max_depth 0 forces a constant leaf).
        let grid = vec![
            ModelConfig::Tree {
                max_depth: 0,
                min_samples_split: 2,
                min_samples_leaf: 1,
                seed: 0,
            },
            ModelConfig::Tree {
                max_depth: 4,
                min_samples_split: 2,
                min_samples_leaf: 1,
                seed: 0,
            },
        ];
        let result = grid_search_cv(&table, Family::Tree, &grid, 5, 3).unwrap();
        assert_eq!(result.best, result.candidates[1].config);
        assert!(result.candidates[1].score() > result.candidates[0].score());
    }

    #[test]
    fn ties_keep_the_earliest_candidate() {
        let table = planted(40, 4);
        // Identical configs necessarily tie; enumeration order decides.
        let cfg = ModelConfig::Linsvm { c: 1.0, seed: 0 };
        let grid = vec![cfg.clone(), cfg];
        let result = grid_search_cv(&table, Family::Linsvm, &grid, 4, 5).unwrap();
        assert_eq!(result.best, result.candidates[0].config);
    }

    #[test]
    fn mixed_family_grid_is_rejected() {
        let table = planted(30, 6);
        let grid = vec![
            ModelConfig::Linsvm { c: 1.0, seed: 0 },
            ModelConfig::Logreg {
                penalty: Penalty::L2,
                c: 1.0,
                seed: 0,
            },
        ];
        assert!(matches!(
            grid_search_cv(&table, Family::Linsvm, &grid, 5, 0),
            Err(ModelError::BadConfig(_))
        ));
    }

    #[test]
    fn stock_grids_match_published_search_spaces() {
        assert_eq!(default_grid(Family::Rf).len(), 3 * 3 * 3 * 3 * 4);
        assert_eq!(default_grid(Family::Logreg).len(), 6);
        assert_eq!(default_grid(Family::Gb).len(), 4 * 3 * 3 * 3);
        assert_eq!(default_grid(Family::Linsvm).len(), 5);
        assert_eq!(default_grid(Family::Mlp).len(), 27);

        // The published best Botswana forest is one of the stock
        // candidates and survives an artifact round-trip.
        let best = ModelConfig::Rf {
            n_estimators: 500,
            max_depth: 80,
            max_features: 2,
            min_samples_leaf: 5,
            min_samples_split: 4,
            seed: 0,
        };
        assert!(default_grid(Family::Rf).contains(&best));
        let text = serde_json::to_string(&best).unwrap();
        assert_eq!(serde_json::from_str::<ModelConfig>(&text).unwrap(), best);
    }
}
