//! Labeled example tables, ten-fold splits and stratified initial labeled sets.

mod io;
pub mod waveform;

pub use io::{load_csv, write_csv, ClassSpec, Delimiter, Schema};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WdneError};
use crate::linalg::Matrix;

pub const FOLD_COUNT: usize = 10;

/// Feature matrix plus integer class labels.
///
/// Row ids refer to the data rows of the source file (0-based, header and
/// ignored-label rows excluded) and survive subsetting.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    features: Matrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
    class_values: Vec<String>,
    positive_class: usize,
    row_ids: Vec<usize>,
}

impl DataTable {
    /// Class values default to the class names.
    pub fn new(features: Matrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let values = class_names.clone();
        DataTable::with_classes(features, labels, class_names, values, 0)
    }

    pub fn with_classes(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        class_values: Vec<String>,
        positive_class: usize,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(WdneError::Shape {
                context: "DataTable labels",
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if class_values.len() != class_names.len() {
            return Err(WdneError::Shape {
                context: "DataTable class values",
                expected: class_names.len(),
                got: class_values.len(),
            });
        }
        if class_names.is_empty() || positive_class >= class_names.len() {
            return Err(WdneError::Schema(format!(
                "positive class {positive_class} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some((row, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_names.len()) {
            return Err(WdneError::Data {
                row,
                column: features.cols(),
                message: format!("label {l} out of range for {} classes", class_names.len()),
            });
        }
        for (row, r) in features.row_iter().enumerate() {
            if let Some(column) = r.iter().position(|v| !v.is_finite()) {
                return Err(WdneError::Data {
                    row,
                    column,
                    message: format!("non-finite feature {}", r[column]),
                });
            }
        }
        let row_ids = (0..labels.len()).collect();
        Ok(DataTable {
            features,
            labels,
            class_names,
            class_values,
            positive_class,
            row_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_values(&self) -> &[String] {
        &self.class_values
    }

    pub fn positive_class(&self) -> usize {
        self.positive_class
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at the given positions, in the given order.
    pub fn subset(&self, positions: &[usize]) -> DataTable {
        DataTable {
            features: self.features.select_rows(positions),
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            class_values: self.class_values.clone(),
            positive_class: self.positive_class,
            row_ids: positions.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Same rows and labels with a replacement feature matrix (e.g. a transformed one).
    pub fn with_features(&self, features: Matrix) -> Result<DataTable> {
        if features.rows() != self.len() {
            return Err(WdneError::Shape {
                context: "DataTable::with_features",
                expected: self.len(),
                got: features.rows(),
            });
        }
        Ok(DataTable {
            features,
            ..self.clone()
        })
    }
}

/// Row positions for one cross-validation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Assigns every row position to one of ten stratified folds.
pub fn fold_assignment(table: &DataTable, seed: u64) -> Result<Vec<usize>> {
    let n = table.len();
    if n < FOLD_COUNT {
        return Err(WdneError::Config(format!(
            "ten-fold cross-validation needs at least {FOLD_COUNT} rows, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Stable sort keeps the shuffled order within each class, so dealing
    // the sequence round-robin stratifies the folds.
    order.sort_by_key(|&i| table.labels()[i]);

    let mut fold_of = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold_of[i] = k % FOLD_COUNT;
    }
    Ok(fold_of)
}

/// Ten splits: split `i` validates on fold `i`, tests on fold `(i+1) mod 10`
/// and trains on the other eight.
pub fn ten_fold_splits(table: &DataTable, seed: u64) -> Result<Vec<FoldSplit>> {
    let fold_of = fold_assignment(table, seed)?;
    Ok((0..FOLD_COUNT)
        .map(|i| {
            let test_fold = (i + 1) % FOLD_COUNT;
            let mut split = FoldSplit {
                fold_index: i,
                train: Vec::new(),
                validation: Vec::new(),
                test: Vec::new(),
            };
            for (row, &f) in fold_of.iter().enumerate() {
                if f == i {
                    split.validation.push(row);
                } else if f == test_fold {
                    split.test.push(row);
                } else {
                    split.train.push(row);
                }
            }
            split
        })
        .collect())
}

/// Draws exactly `pos_count` rows of the positive class and `neg_count` rows of
/// the other classes from `candidates`, uniformly without replacement.
///
/// Returns `(labeled, remainder)`; the remainder keeps candidate order.
pub fn stratified_initial(
    table: &DataTable,
    candidates: &[usize],
    pos_count: usize,
    neg_count: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if pos_count == 0 || neg_count == 0 {
        return Err(WdneError::Config(format!(
            "initial labeled set needs at least one example of each kind, got {pos_count} positive / {neg_count} negative"
        )));
    }
    let positive = table.positive_class();
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        candidates.iter().partition(|&&i| table.labels()[i] == positive);
    if pos.len() < pos_count || neg.len() < neg_count {
        return Err(WdneError::Config(format!(
            "need {pos_count} positive and {neg_count} negative examples, only {} and {} available",
            pos.len(),
            neg.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut labeled: Vec<usize> = pos[..pos_count].to_vec();
    labeled.extend_from_slice(&neg[..neg_count]);

    let chosen: std::collections::HashSet<usize> = labeled.iter().copied().collect();
    let remainder = candidates.iter().copied().filter(|i| !chosen.contains(i)).collect();
    Ok((labeled, remainder))
}

/// Per-class row counts keyed by class name, for reports.
pub fn class_histogram(table: &DataTable) -> BTreeMap<String, usize> {
    table
        .class_names()
        .iter()
        .cloned()
        .zip(table.class_counts())
        .collect()
}
