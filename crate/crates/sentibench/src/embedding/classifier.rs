//! Unified training and prediction over the two ensemble kinds.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::boosted::{train_gbt, GbtHyperparameters, GbtModel};
use super::forest::{train_forest, ForestHyperparameters, ForestModel};
use super::tree::derive_seed;
use super::DenseMatrix;
use crate::corpus::SentimentLabel;

/// Which ensemble to train.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    RandomForest,
    GradientBoostedTrees,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random-forest",
            ClassifierKind::GradientBoostedTrees => "gradient-boosted-trees",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random-forest" | "forest" | "rf" => Ok(ClassifierKind::RandomForest),
            "gradient-boosted-trees" | "boosted" | "gbt" => {
                Ok(ClassifierKind::GradientBoostedTrees)
            }
            other => Err(format!(
                "unknown classifier kind {other:?} (expected random-forest or \
                 gradient-boosted-trees)"
            )),
        }
    }
}

/// Training failures.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("row {0} contains a non-finite value")]
    NonFinite(usize),
}

/// Settings for [`train_classifier`]; the kind selects which
/// hyperparameter block applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub kind: ClassifierKind,
    pub seed: u64,
    pub forest: ForestHyperparameters,
    pub gbt: GbtHyperparameters,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            kind: ClassifierKind::RandomForest,
            seed: 42,
            forest: ForestHyperparameters::default(),
            gbt: GbtHyperparameters::default(),
        }
    }
}

impl TrainOptions {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        TrainOptions {
            kind,
            seed,
            ..Default::default()
        }
    }
}

/// A trained three-class sentiment classifier of either kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassifierModel {
    #[serde(rename = "random-forest")]
    RandomForest(ForestModel),
    #[serde(rename = "gradient-boosted-trees")]
    GradientBoostedTrees(GbtModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierModel::GradientBoostedTrees(_) => ClassifierKind::GradientBoostedTrees,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            ClassifierModel::RandomForest(m) => m.feature_dim,
            ClassifierModel::GradientBoostedTrees(m) => m.feature_dim,
        }
    }

    /// Predicts class codes (0/1/2) for every row.
    pub fn predict_codes(&self, x: &DenseMatrix) -> Result<Vec<u8>, TrainError> {
        if x.cols() != self.feature_dim() {
            return Err(TrainError::ShapeMismatch(format!(
                "input has {} columns but the model was trained on {}",
                x.cols(),
                self.feature_dim()
            )));
        }
        Ok(match self {
            ClassifierModel::RandomForest(m) => m.predict(x),
            ClassifierModel::GradientBoostedTrees(m) => m.predict(x),
        })
    }

    /// Predicts sentiment labels for every row.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<SentimentLabel>, TrainError> {
        Ok(self
            .predict_codes(x)?
            .into_iter()
            .map(|code| SentimentLabel::from_code(code).expect("codes stay within 0..3"))
            .collect())
    }
}

fn validate_training_input(x: &DenseMatrix, y: &[SentimentLabel]) -> Result<Vec<u8>, TrainError> {
    if x.rows() == 0 {
        return Err(TrainError::EmptyTrainingSet);
    }
    if x.rows() != y.len() {
        return Err(TrainError::ShapeMismatch(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    for (i, row) in x.iter_rows().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFinite(i));
        }
    }
    Ok(y.iter().map(|label| label.code()).collect())
}

/// Trains a classifier of the requested kind on labeled rows.
pub fn train_classifier(
    x: &DenseMatrix,
    y: &[SentimentLabel],
    options: &TrainOptions,
) -> Result<ClassifierModel, TrainError> {
    let codes = validate_training_input(x, y)?;
    let n_classes = SentimentLabel::ALL.len();
    Ok(match options.kind {
        ClassifierKind::RandomForest => ClassifierModel::RandomForest(train_forest(
            x,
            &codes,
            n_classes,
            options.seed,
            &options.forest,
        )),
        ClassifierKind::GradientBoostedTrees => {
            ClassifierModel::GradientBoostedTrees(train_gbt(x, &codes, n_classes, &options.gbt))
        }
    })
}

/// One grid-search cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSearchEntry {
    pub max_depth: usize,
    /// Trees for a forest, rounds for a boosted ensemble.
    pub ensemble_size: usize,
    pub validation_accuracy: f64,
}

/// Grid-search output: every cell plus the winner refit on all data.
#[derive(Clone, Debug)]
pub struct GridSearchReport {
    pub entries: Vec<GridSearchEntry>,
    pub best: GridSearchEntry,
    pub model: ClassifierModel,
}

/// Coarse grid search over depth and ensemble size with a seeded 80/20
/// holdout. The best cell (ties go to the earliest) is refit on the full
/// training set.
pub fn grid_search(
    x: &DenseMatrix,
    y: &[SentimentLabel],
    base: &TrainOptions,
    depths: &[usize],
    sizes: &[usize],
) -> Result<GridSearchReport, TrainError> {
    validate_training_input(x, y)?;
    if depths.is_empty() || sizes.is_empty() {
        return Err(TrainError::ShapeMismatch(
            "grid search needs at least one depth and one size".into(),
        ));
    }
    if x.rows() < 2 {
        return Err(TrainError::ShapeMismatch(
            "grid search needs at least 2 rows for a holdout".into(),
        ));
    }

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base.seed, u64::from_le_bytes(*b"holdout\0")));
    order.shuffle(&mut rng);
    let holdout = (x.rows() / 5).max(1);
    let (valid_rows, train_rows) = order.split_at(holdout);

    let take = |rows: &[usize]| -> (DenseMatrix, Vec<SentimentLabel>) {
        let data: Vec<Vec<f64>> = rows.iter().map(|&i| x.row(i).to_vec()).collect();
        let labels = rows.iter().map(|&i| y[i]).collect();
        (DenseMatrix::from_rows(&data).expect("rows are uniform"), labels)
    };
    let (train_x, train_y) = take(train_rows);
    let (valid_x, valid_y) = take(valid_rows);

    let mut entries = Vec::with_capacity(depths.len() * sizes.len());
    for &depth in depths {
        for &size in sizes {
            let mut options = *base;
            options.forest.max_depth = depth;
            options.forest.n_trees = size;
            options.gbt.max_depth = depth;
            options.gbt.n_rounds = size;
            let model = train_classifier(&train_x, &train_y, &options)?;
            let predicted = model.predict(&valid_x)?;
            let correct = predicted
                .iter()
                .zip(&valid_y)
                .filter(|(a, b)| a == b)
                .count();
            entries.push(GridSearchEntry {
                max_depth: depth,
                ensemble_size: size,
                validation_accuracy: correct as f64 / valid_y.len() as f64,
            });
        }
    }

    let best = *entries
        .iter()
        .max_by(|a, b| a.validation_accuracy.total_cmp(&b.validation_accuracy))
        .expect("grid is non-empty");
    let mut options = *base;
    options.forest.max_depth = best.max_depth;
    options.forest.n_trees = best.ensemble_size;
    options.gbt.max_depth = best.max_depth;
    options.gbt.n_rounds = best.ensemble_size;
    let model = train_classifier(x, y, &options)?;

    Ok(GridSearchReport {
        entries,
        best,
        model,
    })
}
