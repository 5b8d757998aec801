//! Principal component analysis over embedding matrices.
//!
//! Fitting centers the data and takes the singular value decomposition of
//! the centered matrix; components are right singular vectors ordered by
//! descending singular value. Two conventions make the result fully
//! deterministic: components are explicitly sorted (the decomposition
//! itself guarantees no order), and each component is oriented so its
//! largest-magnitude coordinate is positive (singular vectors are only
//! defined up to sign).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DenseMatrix;

/// PCA failures. Rank deficiency is not an error — trailing components
/// of degenerate data simply carry (near-)zero variance.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PcaError {
    #[error("pca dimension error: {0}")]
    DimensionError(String),
}

/// A fitted PCA basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Per-column mean of the training data.
    pub mean: Vec<f64>,
    /// k×dim matrix; row i is the i-th principal axis.
    pub components: DenseMatrix,
    /// Variance captured by each kept component: sigma_i^2 / (n - 1),
    /// non-increasing.
    pub explained_variance: Vec<f64>,
    /// Total variance of the training data (sum over all components,
    /// kept or not), for reporting the retained fraction.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.components.cols()
    }

    /// Fraction of training variance the kept components retain.
    pub fn retained_fraction(&self) -> f64 {
        if self.total_variance <= 0.0 {
            return 1.0;
        }
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    /// Maps scores back to the original space: scores · components + mean.
    pub fn reconstruct(&self, scores: &DenseMatrix) -> Result<DenseMatrix, PcaError> {
        if scores.cols() != self.k() {
            return Err(PcaError::DimensionError(format!(
                "scores have {} columns but the model keeps {} components",
                scores.cols(),
                self.k()
            )));
        }
        let product = scores.to_nalgebra() * self.components.to_nalgebra();
        let mut out = DenseMatrix::from_nalgebra(&product);
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                out.set(i, j, out.get(i, j) + self.mean[j]);
            }
        }
        Ok(out)
    }
}

/// Fits a k-component PCA. Requires at least two rows and
/// `1 <= k <= min(rows - 1, dim)`.
pub fn fit_pca(x: &DenseMatrix, k: usize) -> Result<PcaModel, PcaError> {
    let (rows, dim) = (x.rows(), x.cols());
    if rows < 2 {
        return Err(PcaError::DimensionError(format!(
            "pca needs at least 2 rows, got {rows}"
        )));
    }
    let max_k = (rows - 1).min(dim);
    if k < 1 || k > max_k {
        return Err(PcaError::DimensionError(format!(
            "k must be in 1..={max_k} for {rows} rows of dim {dim}, got {k}"
        )));
    }

    let mut mean = vec![0.0; dim];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }

    let mut centered = nalgebra::DMatrix::zeros(rows, dim);
    for i in 0..rows {
        for j in 0..dim {
            centered[(i, j)] = x.get(i, j) - mean[j];
        }
    }

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("v_t was requested");
    let sigma = svd.singular_values;

    // Explicit descending sort by singular value; index breaks exact ties.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| {
        sigma[b]
            .partial_cmp(&sigma[a])
            .expect("singular values are finite")
            .then(a.cmp(&b))
    });

    let denominator = (rows - 1) as f64;
    let total_variance: f64 = sigma.iter().map(|s| s * s / denominator).sum();

    let mut components = DenseMatrix::zeros(k, dim);
    let mut explained_variance = Vec::with_capacity(k);
    for (row_index, &source) in order.iter().take(k).enumerate() {
        let mut component: Vec<f64> = (0..dim).map(|j| v_t[(source, j)]).collect();
        // Sign convention: the coordinate with the largest magnitude is
        // positive. First occurrence wins on exact magnitude ties.
        let mut anchor = 0;
        for (j, value) in component.iter().enumerate() {
            if value.abs() > component[anchor].abs() {
                anchor = j;
            }
        }
        if component[anchor] < 0.0 {
            for value in &mut component {
                *value = -*value;
            }
        }
        for (j, value) in component.iter().enumerate() {
            components.set(row_index, j, *value);
        }
        explained_variance.push(sigma[source] * sigma[source] / denominator);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

/// Projects rows of `x` onto the fitted basis: (x - mean) · componentsᵀ.
pub fn transform_pca(model: &PcaModel, x: &DenseMatrix) -> Result<DenseMatrix, PcaError> {
    if x.cols() != model.dim() {
        return Err(PcaError::DimensionError(format!(
            "input has {} columns but the model was fit on {}",
            x.cols(),
            model.dim()
        )));
    }
    let mut centered = nalgebra::DMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            centered[(i, j)] = x.get(i, j) - model.mean[j];
        }
    }
    let scores = centered * model.components.to_nalgebra().transpose();
    Ok(DenseMatrix::from_nalgebra(&scores))
}
