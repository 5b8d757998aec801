//! Decision-tree internals shared by the random forest and the
//! gradient-boosted ensemble.
//!
//! Trees are stored as flat node vectors with explicit child indices,
//! which keeps them trivially serializable. Building is deterministic
//! for a fixed input and RNG stream: features are scanned in ascending
//! order, candidate thresholds in ascending value order, and the first
//! strictly-best split wins.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;

/// Minimum improvement for a split to be accepted; guards against
/// splitting on floating-point noise.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree<L> {
    nodes: Vec<Node<L>>,
    root: usize,
}

impl<L: Copy> Tree<L> {
    /// Routes one row to its leaf. Rows with `value <= threshold` go left.
    pub(crate) fn predict_row(&self, row: &[f64]) -> L {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                Node::Leaf(value) => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Derives a per-stream seed from a master seed, splitmix64-style, so
/// that per-tree RNGs are decorrelated without consuming a shared stream.
pub(crate) fn derive_seed(master: u64, stream: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(master ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

// ---------------------------------------------------------------------
// Classification trees (Gini impurity), used by the random forest.
// ---------------------------------------------------------------------

pub(crate) struct ClassTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features sampled per split; 0 means "use all".
    pub features_per_split: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

fn majority_class(counts: &[usize]) -> u8 {
    let mut best = 0;
    for (class, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = class;
        }
    }
    best as u8
}

/// Grows a Gini-impurity classification tree over the given row indices.
pub(crate) fn build_class_tree(
    x: &DenseMatrix,
    y: &[u8],
    n_classes: usize,
    indices: &[usize],
    params: &ClassTreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree<u8> {
    let mut nodes = Vec::new();
    let root = grow_class_node(
        &mut nodes,
        x,
        y,
        n_classes,
        indices.to_vec(),
        0,
        params,
        rng,
    );
    Tree { nodes, root }
}

#[allow(clippy::too_many_arguments)]
fn grow_class_node(
    nodes: &mut Vec<Node<u8>>,
    x: &DenseMatrix,
    y: &[u8],
    n_classes: usize,
    indices: Vec<usize>,
    depth: usize,
    params: &ClassTreeParams,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &i in &indices {
        counts[y[i] as usize] += 1;
    }
    let total = indices.len();
    let parent_impurity = gini(&counts, total);
    let is_pure = counts.contains(&total);

    let make_leaf = |nodes: &mut Vec<Node<u8>>| {
        nodes.push(Node::Leaf(majority_class(&counts)));
        nodes.len() - 1
    };

    if is_pure || depth >= params.max_depth || total < params.min_samples_split {
        return make_leaf(nodes);
    }

    let dim = x.cols();
    let candidates = sample_features(dim, params.features_per_split, rng);

    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(total);
    for &feature in &candidates {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (x.get(i, feature), y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_counts = vec![0usize; n_classes];
        for cut in 1..total {
            left_counts[pairs[cut - 1].1 as usize] += 1;
            if pairs[cut].0 <= pairs[cut - 1].0 {
                continue; // identical values cannot be separated
            }
            let right_counts: Vec<usize> = counts
                .iter()
                .zip(&left_counts)
                .map(|(&all, &left)| all - left)
                .collect();
            let weighted = (cut as f64 * gini(&left_counts, cut)
                + (total - cut) as f64 * gini(&right_counts, total - cut))
                / total as f64;
            let gain = parent_impurity - weighted;
            if gain > best.map_or(MIN_GAIN, |(_, _, gain)| gain) {
                let threshold = pairs[cut - 1].0 + (pairs[cut].0 - pairs[cut - 1].0) / 2.0;
                best = Some((feature, threshold, gain));
            }
        }
    }

    let Some((feature, threshold, _)) = best else {
        return make_leaf(nodes);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| x.get(i, feature) <= threshold);
    let left = grow_class_node(nodes, x, y, n_classes, left_rows, depth + 1, params, rng);
    let right = grow_class_node(nodes, x, y, n_classes, right_rows, depth + 1, params, rng);
    nodes.push(Node::Split {
        feature,
        threshold,
        left,
        right,
    });
    nodes.len() - 1
}

/// Samples `m` distinct feature indices (all of them when `m` is 0 or
/// covers the whole dimension), returned in ascending order so the
/// split scan stays order-deterministic.
fn sample_features(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if m == 0 || m >= dim {
        return (0..dim).collect();
    }
    let mut pool: Vec<usize> = (0..dim).collect();
    for i in 0..m {
        let j = rng.random_range(i..dim);
        pool.swap(i, j);
    }
    let mut chosen = pool[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

// ---------------------------------------------------------------------
// Regression trees on gradient/hessian statistics, used by boosting.
// ---------------------------------------------------------------------

pub(crate) struct RegTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
}

/// Grows a regression tree on per-row gradients and hessians. Leaves
/// carry the regularized Newton step -G / (H + lambda); splits maximize
/// the standard second-order gain
/// `GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)`.
pub(crate) fn build_reg_tree(
    x: &DenseMatrix,
    g: &[f64],
    h: &[f64],
    indices: &[usize],
    params: &RegTreeParams,
) -> Tree<f64> {
    let mut nodes = Vec::new();
    let root = grow_reg_node(&mut nodes, x, g, h, indices.to_vec(), 0, params);
    Tree { nodes, root }
}

fn grow_reg_node(
    nodes: &mut Vec<Node<f64>>,
    x: &DenseMatrix,
    g: &[f64],
    h: &[f64],
    indices: Vec<usize>,
    depth: usize,
    params: &RegTreeParams,
) -> usize {
    let total = indices.len();
    let g_sum: f64 = indices.iter().map(|&i| g[i]).sum();
    let h_sum: f64 = indices.iter().map(|&i| h[i]).sum();
    let leaf_value = -g_sum / (h_sum + params.lambda);
    let parent_score = g_sum * g_sum / (h_sum + params.lambda);

    let make_leaf = |nodes: &mut Vec<Node<f64>>| {
        nodes.push(Node::Leaf(leaf_value));
        nodes.len() - 1
    };

    if depth >= params.max_depth || total < params.min_samples_split {
        return make_leaf(nodes);
    }

    let mut best: Option<(usize, f64, f64)> = None;
    let mut pairs: Vec<(f64, f64, f64)> = Vec::with_capacity(total); // (value, g, h)
    for feature in 0..x.cols() {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (x.get(i, feature), g[i], h[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut gl = 0.0;
        let mut hl = 0.0;
        for cut in 1..total {
            gl += pairs[cut - 1].1;
            hl += pairs[cut - 1].2;
            if pairs[cut].0 <= pairs[cut - 1].0 {
                continue;
            }
            let gr = g_sum - gl;
            let hr = h_sum - hl;
            let gain = gl * gl / (hl + params.lambda) + gr * gr / (hr + params.lambda)
                - parent_score;
            if gain > best.map_or(MIN_GAIN, |(_, _, gain)| gain) {
                let threshold = pairs[cut - 1].0 + (pairs[cut].0 - pairs[cut - 1].0) / 2.0;
                best = Some((feature, threshold, gain));
            }
        }
    }

    let Some((feature, threshold, _)) = best else {
        return make_leaf(nodes);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| x.get(i, feature) <= threshold);
    let left = grow_reg_node(nodes, x, g, h, left_rows, depth + 1, params);
    let right = grow_reg_node(nodes, x, g, h, right_rows, depth + 1, params);
    nodes.push(Node::Split {
        feature,
        threshold,
        left,
        right,
    });
    nodes.len() - 1
}
