//! Feature-table preprocessing: min-max scaling, correlation pruning and
//! the stratified train/validation/test split.
//!
//! Scaler parameters and the retained-column list are fitted on training
//! rows only and travel inside the model artifact, so applying a trained
//! model never refits anything.

use serde::{Deserialize, Serialize};

use crate::features::{FeatError, FeatureTable};
use crate::rng::{derive_seed, SplitMix64};

/// Correlation threshold above which (strictly) a later column is dropped.
pub const CORRELATION_THRESHOLD: f64 = 0.9;

/// Default split fractions.
pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.70, 0.15, 0.15);

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {required} rows, found {found}")]
    NotEnoughRows { found: usize, required: usize },
    #[error("column {0} missing from table")]
    UnknownColumn(String),
    #[error("split fractions {0}, {1}, {2} do not sum to 1")]
    BadFractions(f64, f64, f64),
    #[error("class {class} has only {count} rows, need at least 3")]
    DegenerateClass { class: u8, count: usize },
    #[error("table has no labels")]
    MissingLabels,
    #[error("table has no rows")]
    EmptyTable,
    #[error(transparent)]
    Feat(#[from] FeatError),
}

/// Per-column training min and max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Fitted min-max scaler. Column order is the fitted table's order and is
/// the order [`minmax_apply`] emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub columns: Vec<ColumnRange>,
}

impl ScalerState {
    pub fn range(&self, name: &str) -> Option<(f64, f64)> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| (c.min, c.max))
    }
}

/// Maps x into the fitted range; constant columns collapse to 0.
pub(crate) fn scale_value(x: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (x - min) / (max - min)
    } else {
        0.0
    }
}

/// Records each column's min and max over the given (training) table.
pub fn minmax_fit(train: &FeatureTable) -> Result<ScalerState, PrepError> {
    if train.n_rows() == 0 {
        return Err(PrepError::EmptyTable);
    }
    let columns = train
        .columns()
        .iter()
        .map(|(name, values)| ColumnRange {
            name: name.clone(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    Ok(ScalerState { columns })
}

/// Rescales the state's columns, taken from `table` by name. Values are
/// not clamped, so rows outside the training range map outside [0, 1].
/// Output column order is the state's; columns the state does not know
/// are dropped.
pub fn minmax_apply(state: &ScalerState, table: &FeatureTable) -> Result<FeatureTable, PrepError> {
    let mut columns = Vec::with_capacity(state.columns.len());
    for range in &state.columns {
        let values = table
            .column(&range.name)
            .ok_or_else(|| PrepError::UnknownColumn(range.name.clone()))?;
        let scaled = values
            .iter()
            .map(|&x| scale_value(x, range.min, range.max))
            .collect();
        columns.push((range.name.clone(), scaled));
    }
    let table = FeatureTable::new(
        table.ids().to_vec(),
        columns,
        table.labels().map(|l| l.to_vec()),
    )?;
    Ok(table)
}

/// Sample Pearson correlation. The centered cross-sum over the root of
/// the centered square-sum product; the (n-1) normalizations cancel.
/// Either vector constant gives 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, PrepError> {
    if x.len() != y.len() {
        return Err(PrepError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(PrepError::NotEnoughRows {
            found: x.len(),
            required: 2,
        });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut sq_x = 0.0;
    let mut sq_y = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mean_x, yi - mean_y);
        cross += dx * dy;
        sq_x += dx * dx;
        sq_y += dy * dy;
    }
    if sq_x == 0.0 || sq_y == 0.0 {
        return Ok(0.0);
    }
    Ok((cross / (sq_x * sq_y).sqrt()).clamp(-1.0, 1.0))
}

/// Greedy correlation pruning in table column order: a column is dropped
/// iff its correlation with some already-retained column strictly exceeds
/// the threshold. The earlier column always wins.
pub fn correlation_prune(train: &FeatureTable, threshold: f64) -> Result<Vec<String>, PrepError> {
    if train.n_rows() < 2 {
        return Err(PrepError::NotEnoughRows {
            found: train.n_rows(),
            required: 2,
        });
    }
    let mut retained: Vec<String> = Vec::new();
    for (name, values) in train.columns() {
        let mut keep = true;
        for kept in &retained {
            let kept_values = train.column(kept).expect("retained names come from the table");
            if pearson(values, kept_values)?.abs() > threshold {
                keep = false;
                break;
            }
        }
        if keep {
            retained.push(name.clone());
        }
    }
    Ok(retained)
}

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self, PrepError> {
        let ok = train >= 0.0 && val >= 0.0 && test >= 0.0 && (train + val + test - 1.0).abs() < 1e-9;
        if !ok {
            return Err(PrepError::BadFractions(train, val, test));
        }
        Ok(Self { train, val, test, seed })
    }

    /// The 0.70 / 0.15 / 0.15 default.
    pub fn with_default_fractions(seed: u64) -> Self {
        let (train, val, test) = DEFAULT_SPLIT;
        Self { train, val, test, seed }
    }
}

/// Splits per class: each class's rows are shuffled with a seed derived
/// from the spec seed and the class id, each split takes floor(fraction
/// times the class size) rows, and leftover rows go one each to train,
/// then validation, then test. Classes with fewer than 3 rows error.
pub fn stratified_split(
    table: &FeatureTable,
    spec: &SplitSpec,
) -> Result<(FeatureTable, FeatureTable, FeatureTable), PrepError> {
    let labels = table.labels().ok_or(PrepError::MissingLabels)?;
    let mut train_rows = Vec::new();
    let mut val_rows = Vec::new();
    let mut test_rows = Vec::new();
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < 3 {
            return Err(PrepError::DegenerateClass {
                class,
                count: rows.len(),
            });
        }
        let mut rng = SplitMix64::new(derive_seed(spec.seed, class as u64));
        rng.shuffle(&mut rows);

        let n = rows.len();
        let mut counts = [
            (spec.train * n as f64).floor() as usize,
            (spec.val * n as f64).floor() as usize,
            (spec.test * n as f64).floor() as usize,
        ];
        let mut leftover = n - counts.iter().sum::<usize>();
        for count in counts.iter_mut() {
            if leftover == 0 {
                break;
            }
            *count += 1;
            leftover -= 1;
        }
        let mut rest = rows;
        let mut remainder = rest.split_off(counts[0]);
        train_rows.extend(rest);
        rest = remainder;
        remainder = rest.split_off(counts[1]);
        val_rows.extend(rest);
        test_rows.extend(remainder);
    }
    Ok((
        table.select_rows(&train_rows),
        table.select_rows(&val_rows),
        table.select_rows(&test_rows),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(columns: Vec<(&str, Vec<f64>)>, labels: Option<Vec<u8>>) -> FeatureTable {
        let n = columns[0].1.len();
        let ids = (0..n).map(|i| format!("s{i:03}")).collect();
        let columns = columns
            .into_iter()
            .map(|(name, values)| (name.to_string(), values))
            .collect();
        FeatureTable::new(ids, columns, labels).unwrap()
    }

    #[test]
    fn minmax_scales_without_clamping() {
        let train = table(vec![("a", vec![0.0, 10.0, 5.0]), ("c", vec![7.0, 7.0, 7.0])], None);
        let state = minmax_fit(&train).unwrap();
        assert_eq!(state.range("a"), Some((0.0, 10.0)));

        let scaled = minmax_apply(&state, &train).unwrap();
        assert_eq!(scaled.column("a").unwrap(), &[0.0, 1.0, 0.5]);
        // Constant column collapses to zero.
        assert_eq!(scaled.column("c").unwrap(), &[0.0, 0.0, 0.0]);

        // Out-of-range rows scale past 1 rather than clamping.
        let test = table(vec![("a", vec![12.0]), ("c", vec![7.0])], None);
        let scaled = minmax_apply(&state, &test).unwrap();
        assert_eq!(scaled.column("a").unwrap(), &[1.2]);
    }

    #[test]
    fn minmax_apply_requires_fitted_columns() {
        let train = table(vec![("a", vec![0.0, 1.0]), ("b", vec![0.0, 1.0])], None);
        let state = minmax_fit(&train).unwrap();
        let other = table(vec![("a", vec![0.5, 0.5])], None);
        assert!(matches!(
            minmax_apply(&state, &other),
            Err(PrepError::UnknownColumn(name)) if name == "b"
        ));
    }

    #[test]
    fn pearson_reference_values() {
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(
            pearson(&[1.0], &[1.0, 2.0]),
            Err(PrepError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(pearson(&[1.0], &[2.0]), Err(PrepError::NotEnoughRows { .. })));
    }

    #[test]
    fn prune_drops_later_duplicates_and_keeps_boundary() {
        // b duplicates a (r = 1), d is an exact 0.9 against a: only the
        // strict exceedance goes.
        let a = vec![1.0, 2.0, 4.0, 5.0];
        let d = vec![2.0, 1.0, 4.0, 5.0];
        assert_eq!(pearson(&a, &d).unwrap(), 0.9);
        let train = table(
            vec![
                ("a", a.clone()),
                ("b", a.iter().map(|v| 2.0 * v + 1.0).collect()),
                ("d", d),
                ("e", vec![5.0, -3.0, 4.0, 0.0]),
            ],
            None,
        );
        let retained = correlation_prune(&train, CORRELATION_THRESHOLD).unwrap();
        assert_eq!(retained, ["a", "d", "e"]);

        // Threshold 1.0: even a perfect copy survives the strict compare.
        let retained = correlation_prune(&train, 1.0).unwrap();
        assert_eq!(retained, ["a", "b", "d", "e"]);
    }

    #[test]
    fn prune_is_row_permutation_invariant() {
        let train = table(
            vec![
                ("a", vec![1.0, 2.0, 4.0, 5.0]),
                ("b", vec![3.0, 5.0, 9.0, 11.0]),
                ("e", vec![5.0, -3.0, 4.0, 0.0]),
            ],
            None,
        );
        let permuted = train.select_rows(&[2, 0, 3, 1]);
        assert_eq!(
            correlation_prune(&train, CORRELATION_THRESHOLD).unwrap(),
            correlation_prune(&permuted, CORRELATION_THRESHOLD).unwrap()
        );
    }

    fn labeled_table(n_pos: usize, n_neg: usize) -> FeatureTable {
        let n = n_pos + n_neg;
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
        table(vec![("x", values)], Some(labels))
    }

    #[test]
    fn split_matches_floor_allocation() {
        let table = labeled_table(60, 40);
        let spec = SplitSpec::with_default_fractions(7);
        let (train, val, test) = stratified_split(&table, &spec).unwrap();
        assert_eq!((train.n_rows(), val.n_rows(), test.n_rows()), (70, 15, 15));
        let count = |t: &FeatureTable, class: u8| t.labels().unwrap().iter().filter(|&&l| l == class).count();
        assert_eq!((count(&train, 1), count(&train, 0)), (42, 28));
        assert_eq!((count(&val, 1), count(&val, 0)), (9, 6));
        assert_eq!((count(&test, 1), count(&test, 0)), (9, 6));
    }

    #[test]
    fn split_remainder_goes_to_train_first() {
        // 10 rows of one class: floors are 7/1/1, the leftover row lands
        // in train.
        let table = labeled_table(10, 5);
        let spec = SplitSpec::with_default_fractions(7);
        let (train, val, test) = stratified_split(&table, &spec).unwrap();
        let count = |t: &FeatureTable| t.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert_eq!((count(&train), count(&val), count(&test)), (8, 1, 1));
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let table = labeled_table(2, 50);
        let spec = SplitSpec::with_default_fractions(7);
        assert!(matches!(
            stratified_split(&table, &spec),
            Err(PrepError::DegenerateClass { class: 1, count: 2 })
        ));
    }

    #[test]
    fn split_spec_validates_fractions() {
        assert!(SplitSpec::new(0.5, 0.3, 0.3, 0).is_err());
        assert!(SplitSpec::new(0.6, 0.4, 0.0, 0).is_ok());
        assert!(SplitSpec::new(-0.1, 0.6, 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_exactly(n_pos in 3usize..40, n_neg in 3usize..40, seed in any::<u64>()) {
            let table = labeled_table(n_pos, n_neg);
            let spec = SplitSpec::with_default_fractions(seed);
            let (train, val, test) = stratified_split(&table, &spec).unwrap();

            let mut ids: Vec<&String> = train.ids().iter().chain(val.ids()).chain(test.ids()).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), table.n_rows());

            // Per-class allocation stays within one row of proportional.
            for (class, total) in [(1u8, n_pos), (0u8, n_neg)] {
                let count = |t: &FeatureTable| t.labels().unwrap().iter().filter(|&&l| l == class).count();
                let floor = (0.70 * total as f64).floor() as usize;
                prop_assert!((floor..=floor + 1).contains(&count(&train)));
            }

            // Same seed reproduces the same split.
            let (train2, _, _) = stratified_split(&table, &spec).unwrap();
            prop_assert_eq!(train.ids(), train2.ids());
        }

        #[test]
        fn scaled_train_stays_in_unit_interval(values in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
            let train = table(vec![("x", values)], None);
            let state = minmax_fit(&train).unwrap();
            let scaled = minmax_apply(&state, &train).unwrap();
            for &v in scaled.column("x").unwrap() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
