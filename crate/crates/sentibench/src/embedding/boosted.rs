//! Gradient-boosted trees with a softmax multiclass objective.
//!
//! Every round fits one regression tree per class on the gradient and
//! diagonal-Hessian statistics of the cross-entropy loss (g = p - y,
//! h = p(1 - p)), with the regularized Newton leaf -G/(H + lambda).
//! Training is entirely RNG-free: exact greedy splits over all features
//! make the model a pure function of the data and hyperparameters.

use serde::{Deserialize, Serialize};

use super::tree::{build_reg_tree, RegTreeParams, Tree};
use super::DenseMatrix;

/// Boosting knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtHyperparameters {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_samples_split: usize,
}

impl Default for GbtHyperparameters {
    fn default() -> Self {
        GbtHyperparameters {
            n_rounds: 150,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            min_samples_split: 2,
        }
    }
}

/// A trained boosted ensemble; `rounds[r][c]` is round r's tree for
/// class c.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub(crate) rounds: Vec<Vec<Tree<f64>>>,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub hyperparameters: GbtHyperparameters,
}

fn softmax_into(margins: &[f64], probs: &mut [f64]) {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (p, m) in probs.iter_mut().zip(margins) {
        *p = (m - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
}

impl GbtModel {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Raw additive margins for one row, one per class.
    pub fn margins_row(&self, row: &[f64]) -> Vec<f64> {
        let mut margins = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (margin, tree) in margins.iter_mut().zip(round) {
                *margin += self.hyperparameters.learning_rate * tree.predict_row(row);
            }
        }
        margins
    }

    /// Argmax of the margins; ties resolve to the smallest class index.
    /// Panics if `row` is narrower than the training dimension; width is
    /// validated by the classifier wrapper.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let margins = self.margins_row(row);
        let mut best = 0;
        for (class, &margin) in margins.iter().enumerate() {
            if margin > margins[best] {
                best = class;
            }
        }
        best as u8
    }

    pub fn predict(&self, x: &DenseMatrix) -> Vec<u8> {
        x.iter_rows().map(|row| self.predict_row(row)).collect()
    }
}

/// Trains a boosted ensemble on class codes `y` (values in
/// `0..n_classes`).
pub fn train_gbt(
    x: &DenseMatrix,
    y: &[u8],
    n_classes: usize,
    hyperparameters: &GbtHyperparameters,
) -> GbtModel {
    let n = x.rows();
    let indices: Vec<usize> = (0..n).collect();
    let params = RegTreeParams {
        max_depth: hyperparameters.max_depth,
        min_samples_split: hyperparameters.min_samples_split,
        lambda: hyperparameters.lambda,
    };

    let mut margins = vec![vec![0.0; n_classes]; n];
    let mut probs = vec![0.0; n_classes];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut rounds = Vec::with_capacity(hyperparameters.n_rounds);

    for _ in 0..hyperparameters.n_rounds {
        // Probabilities are recomputed once per round from the margins
        // accumulated so far; all class trees in a round share them.
        let mut round_probs = vec![vec![0.0; n_classes]; n];
        for (row_probs, row_margins) in round_probs.iter_mut().zip(&margins) {
            softmax_into(row_margins, &mut probs);
            row_probs.copy_from_slice(&probs);
        }

        let mut round_trees = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            for i in 0..n {
                let p = round_probs[i][class];
                let target = if y[i] as usize == class { 1.0 } else { 0.0 };
                g[i] = p - target;
                h[i] = (p * (1.0 - p)).max(1e-16);
            }
            let tree = build_reg_tree(x, &g, &h, &indices, &params);
            for (i, row_margins) in margins.iter_mut().enumerate() {
                row_margins[class] +=
                    hyperparameters.learning_rate * tree.predict_row(x.row(i));
            }
            round_trees.push(tree);
        }
        rounds.push(round_trees);
    }

    GbtModel {
        rounds,
        feature_dim: x.cols(),
        n_classes,
        hyperparameters: *hyperparameters,
    }
}
