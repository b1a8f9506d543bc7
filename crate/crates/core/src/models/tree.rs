//! CART trees plus the bagged and boosted ensembles built on them.
//!
//! One grower serves all three families. Splits minimize the children's
//! summed squared deviation of the target, which for 0/1 targets ranks
//! splits identically to Gini impurity (binary Gini is twice the
//! Bernoulli variance). Classification leaves store the class-1 share;
//! boosting leaves store a Newton step on the log-loss residuals.

use serde::{Deserialize, Serialize};

use crate::models::{sigmoid, ModelConfig, ModelError, ModelState};
use crate::rng::{derive_seed, SplitMix64};

/// Gains below this are noise, not structure.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `gain` is the split's squared-deviation decrease weighted by node
    /// size, kept for impurity-based feature importance.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

/// Nodes in construction order; the root is index 0. Rows go left when
/// `row[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeState {
    pub nodes: Vec<Node>,
}

impl TreeState {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.depth_from(0)
    }

    fn depth_from(&self, at: usize) -> usize {
        match &self.nodes[at] {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + self.depth_from(*left).max(self.depth_from(*right)),
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` searches all of them.
    pub max_features: Option<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows one tree over the given rows (duplicates allowed, as bootstrap
/// samples produce them). `targets` are what leaves predict; when
/// `hessians` are given a leaf is the Newton step sum(t)/sum(h) instead
/// of the mean. Nodes are expanded depth-first, left child first, so the
/// per-node feature sampling consumes the RNG in a reproducible order.
pub(crate) fn grow_tree(
    x: &[Vec<f64>],
    targets: &[f64],
    hessians: Option<&[f64]>,
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> TreeState {
    let mut nodes = Vec::new();
    nodes.push(Node::Leaf { value: 0.0 });
    let mut stack = vec![(0usize, rows, 0usize)];
    while let Some((at, rows, depth)) = stack.pop() {
        let split = if depth < params.max_depth && rows.len() >= params.min_samples_split {
            find_best_split(x, targets, &rows, params, rng)
        } else {
            None
        };
        match split {
            None => {
                nodes[at] = Node::Leaf {
                    value: leaf_value(targets, hessians, &rows),
                };
            }
            Some(best) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&i| x[i][best.feature] <= best.threshold);
                let left = nodes.len();
                let right = nodes.len() + 1;
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[at] = Node::Split {
                    feature: best.feature,
                    threshold: best.threshold,
                    left,
                    right,
                    gain: best.gain,
                };
                stack.push((right, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
        }
    }
    TreeState { nodes }
}

fn leaf_value(targets: &[f64], hessians: Option<&[f64]>, rows: &[usize]) -> f64 {
    let sum: f64 = rows.iter().map(|&i| targets[i]).sum();
    match hessians {
        Some(h) => {
            let weight: f64 = rows.iter().map(|&i| h[i]).sum();
            if weight <= MIN_GAIN {
                0.0
            } else {
                sum / weight
            }
        }
        None => sum / rows.len() as f64,
    }
}

/// Squared deviation from the mean, via sums; clamped against rounding.
fn sse(sum: f64, sum_sq: f64, n: f64) -> f64 {
    (sum_sq - sum * sum / n).max(0.0)
}

fn find_best_split(
    x: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> Option<BestSplit> {
    let n = rows.len() as f64;
    let sum: f64 = rows.iter().map(|&i| targets[i]).sum();
    let sum_sq: f64 = rows.iter().map(|&i| targets[i] * targets[i]).sum();
    let parent_sse = sse(sum, sum_sq, n);
    if parent_sse <= MIN_GAIN {
        return None;
    }

    let n_features = x[0].len();
    let candidates: Vec<usize> = match params.max_features {
        Some(k) => rng.sample_indices(n_features, k),
        None => (0..n_features).collect(),
    };

    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for &feature in &candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x[i][feature], targets[i])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_n = 0.0;
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for i in 0..pairs.len() - 1 {
            let (value, target) = pairs[i];
            left_n += 1.0;
            left_sum += target;
            left_sq += target * target;
            if value == pairs[i + 1].0 {
                continue;
            }
            let right_n = n - left_n;
            if (left_n as usize) < params.min_samples_leaf || (right_n as usize) < params.min_samples_leaf {
                continue;
            }
            let gain = parent_sse
                - sse(left_sum, left_sq, left_n)
                - sse(sum - left_sum, sum_sq - left_sq, right_n);
            if gain > best.as_ref().map_or(MIN_GAIN, |b| b.gain) {
                best = Some(BestSplit {
                    feature,
                    threshold: value + (pairs[i + 1].0 - value) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn to_f64(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| v as f64).collect()
}

pub(crate) fn fit_tree(x: &[Vec<f64>], y: &[u8], cfg: &ModelConfig) -> Result<TreeState, ModelError> {
    let ModelConfig::Tree {
        max_depth,
        min_samples_split,
        min_samples_leaf,
        seed,
    } = *cfg
    else {
        unreachable!()
    };
    let params = TreeParams {
        max_depth,
        min_samples_split,
        min_samples_leaf,
        max_features: None,
    };
    let mut rng = SplitMix64::new(seed);
    Ok(grow_tree(x, &to_f64(y), None, (0..x.len()).collect(), &params, &mut rng))
}

pub(crate) fn fit_forest(x: &[Vec<f64>], y: &[u8], cfg: &ModelConfig) -> Result<Vec<TreeState>, ModelError> {
    let ModelConfig::Rf {
        n_estimators,
        max_depth,
        max_features,
        min_samples_leaf,
        min_samples_split,
        seed,
    } = *cfg
    else {
        unreachable!()
    };
    let params = TreeParams {
        max_depth,
        min_samples_split,
        min_samples_leaf,
        max_features: Some(max_features),
    };
    let targets = to_f64(y);
    let n = x.len();
    let mut trees = Vec::with_capacity(n_estimators);
    // Each tree owns an RNG derived from its index, so trees could train
    // concurrently and still match this sequential result.
    for tree_index in 0..n_estimators {
        let mut rng = SplitMix64::new(derive_seed(seed, tree_index as u64));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_index(n)).collect();
        trees.push(grow_tree(x, &targets, None, bootstrap, &params, &mut rng));
    }
    Ok(trees)
}

pub(crate) fn fit_boost(x: &[Vec<f64>], y: &[u8], cfg: &ModelConfig) -> Result<ModelState, ModelError> {
    let ModelConfig::Gb {
        n_estimators,
        learning_rate,
        max_depth,
        min_samples_split,
        min_samples_leaf,
        max_features,
        subsample,
        seed,
    } = *cfg
    else {
        unreachable!()
    };
    if !(0.0 < subsample && subsample <= 1.0) {
        return Err(ModelError::BadConfig(format!("subsample {subsample} outside (0, 1]")));
    }
    let params = TreeParams {
        max_depth,
        min_samples_split,
        min_samples_leaf,
        max_features,
    };
    let n = x.len();
    // Log-odds prior, clamped so single-class tables yield a finite
    // constant classifier.
    let mean = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let clamped = mean.clamp(1e-12, 1.0 - 1e-12);
    let prior = (clamped / (1.0 - clamped)).ln();

    let mut scores = vec![prior; n];
    let mut residuals = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    let mut trees = Vec::with_capacity(n_estimators);
    for stage in 0..n_estimators {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residuals[i] = y[i] as f64 - p;
            hessians[i] = p * (1.0 - p);
        }
        let mut rng = SplitMix64::new(derive_seed(seed, stage as u64));
        let rows = if subsample < 1.0 {
            let k = ((subsample * n as f64).floor() as usize).max(1);
            rng.sample_indices(n, k)
        } else {
            (0..n).collect()
        };
        let tree = grow_tree(x, &residuals, Some(&hessians), rows, &params, &mut rng);
        for i in 0..n {
            scores[i] += learning_rate * tree.predict_row(&x[i]);
            if !scores[i].is_finite() {
                return Err(ModelError::NonFiniteLoss);
            }
        }
        trees.push(tree);
    }
    Ok(ModelState::Boost {
        prior,
        learning_rate,
        trees,
    })
}
