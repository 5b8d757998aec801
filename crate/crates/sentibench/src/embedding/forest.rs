//! Random forest over reduced embeddings.
//!
//! Each tree trains on a bootstrap resample and considers a random
//! sqrt-sized feature subset at every split. Tree RNGs are seeded from
//! the master seed and the tree index, so a fixed seed reproduces the
//! whole forest regardless of construction order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{build_class_tree, derive_seed, ClassTreeParams, Tree};
use super::DenseMatrix;

/// Forest training knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestHyperparameters {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for ForestHyperparameters {
    fn default() -> Self {
        ForestHyperparameters {
            n_trees: 200,
            max_depth: 12,
            min_samples_split: 2,
        }
    }
}

/// A trained forest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub(crate) trees: Vec<Tree<u8>>,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub seed: u64,
    pub hyperparameters: ForestHyperparameters,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Majority vote over the trees; ties resolve to the smallest class
    /// index. Panics if `row` is narrower than the training dimension;
    /// width is validated by the classifier wrapper.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(row) as usize] += 1;
        }
        let mut best = 0;
        for (class, &count) in votes.iter().enumerate() {
            if count > votes[best] {
                best = class;
            }
        }
        best as u8
    }

    pub fn predict(&self, x: &DenseMatrix) -> Vec<u8> {
        x.iter_rows().map(|row| self.predict_row(row)).collect()
    }
}

/// Trains a forest on class codes `y` (values in `0..n_classes`).
pub fn train_forest(
    x: &DenseMatrix,
    y: &[u8],
    n_classes: usize,
    seed: u64,
    hyperparameters: &ForestHyperparameters,
) -> ForestModel {
    let n = x.rows();
    let features_per_split = (x.cols() as f64).sqrt().ceil() as usize;
    let params = ClassTreeParams {
        max_depth: hyperparameters.max_depth,
        min_samples_split: hyperparameters.min_samples_split,
        features_per_split,
    };
    let trees = (0..hyperparameters.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            build_class_tree(x, y, n_classes, &bootstrap, &params, &mut rng)
        })
        .collect();
    ForestModel {
        trees,
        feature_dim: x.cols(),
        n_classes,
        seed,
        hyperparameters: *hyperparameters,
    }
}
