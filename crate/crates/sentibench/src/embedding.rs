//! The embedding classification strategy: preprocessing, cached embedding
//! acquisition, PCA reduction, native tree ensembles, and model
//! persistence.
//!
//! The pipeline mirrors its description: normalize tweet text
//! ([`preprocess`]), obtain one embedding per tweet through a disk cache
//! ([`embed_with_cache`]), reduce dimensionality with PCA ([`pca`]), then
//! train and apply a random forest or gradient-boosted trees
//! ([`classifier`]).

pub mod boosted;
pub mod cache;
pub mod classifier;
pub mod forest;
pub mod pca;
pub mod persist;
pub mod preprocess;
mod tree;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, SentimentLabel};
use crate::gateway::{Gateway, GatewayError};

pub use boosted::GbtHyperparameters;
pub use cache::EmbeddingCache;
pub use classifier::{
    grid_search, train_classifier, ClassifierKind, ClassifierModel, TrainError, TrainOptions,
};
pub use forest::ForestHyperparameters;
pub use pca::{fit_pca, transform_pca, PcaError, PcaModel};
pub use persist::{
    load_model, save_model, ModelFile, PersistError, PipelineModel, MODEL_FORMAT_VERSION,
    MODEL_MAGIC,
};
pub use preprocess::{preprocess, PreprocessOptions};

/// Default number of texts per embedding request.
pub const DEFAULT_EMBED_BATCH: usize = 100;

/// Dense row-major matrix of 64-bit floats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from rows, requiring a uniform row length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EmbedError> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(EmbedError::Ragged {
                    row: i,
                    expected: cols,
                    found: row.len(),
                });
            }
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().copied())
    }

    pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        DenseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// A batch of embeddings with provenance: which model produced them and
/// which tweet each row belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub matrix: DenseMatrix,
    pub model_id: String,
    pub row_ids: Vec<String>,
}

impl EmbeddingMatrix {
    /// Wraps a matrix, enforcing the row-id and finiteness invariants.
    pub fn new(
        matrix: DenseMatrix,
        model_id: impl Into<String>,
        row_ids: Vec<String>,
    ) -> Result<Self, EmbedError> {
        if row_ids.len() != matrix.rows() {
            return Err(EmbedError::Ragged {
                row: row_ids.len(),
                expected: matrix.rows(),
                found: row_ids.len(),
            });
        }
        for (i, row) in matrix.iter_rows().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::NonFinite { row: i });
            }
        }
        Ok(EmbeddingMatrix {
            matrix,
            model_id: model_id.into(),
            row_ids,
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

/// Embedding-pipeline failures.
#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("cache entry {path} is corrupt: {reason}")]
    CacheCorruption { path: PathBuf, reason: String },
    #[error("cache io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Cache effectiveness of one [`embed_with_cache`] run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    /// Backend requests issued (ceil(misses / batch_size)).
    pub requests: usize,
}

/// Embeds `texts` through the cache: hits are read from disk, misses are
/// fetched from the backend in batches of `batch_size` and written back.
/// Rows come back in input order. Texts are used verbatim as cache keys,
/// so callers should pass already-preprocessed text.
pub fn embed_with_cache(
    gateway: &Gateway,
    texts: &[String],
    cache: &EmbeddingCache,
    batch_size: usize,
) -> Result<(DenseMatrix, CacheStats), EmbedError> {
    let model_id = gateway.config().model_id.clone();
    let batch_size = batch_size.max(1);
    let mut stats = CacheStats::default();
    let mut rows: Vec<Option<Vec<f64>>> = Vec::with_capacity(texts.len());
    let mut miss_indices = Vec::new();

    for text in texts {
        match cache.get(&model_id, text)? {
            Some(row) => {
                stats.hits += 1;
                rows.push(Some(row));
            }
            None => {
                stats.misses += 1;
                miss_indices.push(rows.len());
                rows.push(None);
            }
        }
    }

    for chunk in miss_indices.chunks(batch_size) {
        let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
        let fetched = gateway.embed(&batch)?;
        stats.requests += 1;
        for (&index, row) in chunk.iter().zip(fetched) {
            cache.put(&model_id, &texts[index], &row)?;
            rows[index] = Some(row);
        }
    }

    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.expect("all rows filled")).collect();
    let matrix = DenseMatrix::from_rows(&rows)?;
    for (i, row) in matrix.iter_rows().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { row: i });
        }
    }
    Ok((matrix, stats))
}

/// Preprocesses and embeds a whole dataset, keeping tweet ids attached.
pub fn embed_dataset(
    gateway: &Gateway,
    dataset: &Dataset,
    options: &PreprocessOptions,
    cache: &EmbeddingCache,
    batch_size: usize,
) -> Result<(EmbeddingMatrix, CacheStats), EmbedError> {
    let texts: Vec<String> = dataset
        .tweets
        .iter()
        .map(|t| preprocess(&t.text, options))
        .collect();
    let (matrix, stats) = embed_with_cache(gateway, &texts, cache, batch_size)?;
    let row_ids = dataset.tweets.iter().map(|t| t.id.clone()).collect();
    let embeddings = EmbeddingMatrix::new(matrix, gateway.config().model_id.clone(), row_ids)?;
    Ok((embeddings, stats))
}

/// Supported 2-D projection methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMethod {
    Pca2D,
}

/// One exported projection coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: Option<SentimentLabel>,
}

/// Projects embeddings to two dimensions for external plotting.
///
/// `gold` is aligned with the embedding rows; unlabeled rows export an
/// empty label column.
pub fn export_projection(
    embeddings: &EmbeddingMatrix,
    gold: &[Option<SentimentLabel>],
    method: ProjectionMethod,
) -> Result<Vec<ProjectionRow>, pca::PcaError> {
    let ProjectionMethod::Pca2D = method;
    if embeddings.rows() < 3 {
        return Err(pca::PcaError::DimensionError(format!(
            "projection needs at least 3 rows, got {}",
            embeddings.rows()
        )));
    }
    if gold.len() != embeddings.rows() {
        return Err(pca::PcaError::DimensionError(format!(
            "{} labels for {} rows",
            gold.len(),
            embeddings.rows()
        )));
    }
    let model = pca::fit_pca(&embeddings.matrix, 2)?;
    let reduced = pca::transform_pca(&model, &embeddings.matrix)?;
    Ok(embeddings
        .row_ids
        .iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (id, label))| ProjectionRow {
            id: id.clone(),
            x: reduced.get(i, 0),
            y: reduced.get(i, 1),
            label: *label,
        })
        .collect())
}

/// Writes projection rows as CSV with the header `id,x,y,label`.
pub fn write_projection_csv(
    rows: &[ProjectionRow],
    path: impl AsRef<Path>,
) -> Result<(), EmbedError> {
    let path = path.as_ref();
    let io_err = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(&mut file);
    writer
        .write_record(["id", "x", "y", "label"])
        .map_err(|e| io_err(std::io::Error::other(e)))?;
    for row in rows {
        let label = row.label.map_or(String::new(), |l| l.word().to_string());
        writer
            .write_record([
                row.id.as_str(),
                &row.x.to_string(),
                &row.y.to_string(),
                &label,
            ])
            .map_err(|e| io_err(std::io::Error::other(e)))?;
    }
    writer.flush().map_err(io_err)?;
    drop(writer);
    file.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::BackendConfig;

    fn mock_gateway(dim: usize) -> Gateway {
        let config = BackendConfig::new(format!("mock://cache-test?seed=11&dim={dim}"), "emb-model");
        Gateway::from_config(config).unwrap()
    }

    #[test]
    fn dense_matrix_rejects_ragged_rows() {
        let err = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, EmbedError::Ragged { row: 1, .. }));
    }

    #[test]
    fn embedding_matrix_rejects_non_finite() {
        let matrix = DenseMatrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap();
        let err = EmbeddingMatrix::new(matrix, "m", vec!["1".into()]).unwrap_err();
        assert!(matches!(err, EmbedError::NonFinite { row: 0 }));
    }

    #[test]
    fn warm_cache_issues_zero_requests() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path()).unwrap();
        let gateway = mock_gateway(6);
        let texts: Vec<String> = (0..7).map(|i| format!("text {i}")).collect();

        let (cold, cold_stats) = embed_with_cache(&gateway, &texts, &cache, 3).unwrap();
        assert_eq!(cold_stats.hits, 0);
        assert_eq!(cold_stats.misses, 7);
        assert_eq!(cold_stats.requests, 3, "ceil(7/3) batches");

        let (warm, warm_stats) = embed_with_cache(&gateway, &texts, &cache, 3).unwrap();
        assert_eq!(warm_stats.hits, 7);
        assert_eq!(warm_stats.misses, 0);
        assert_eq!(warm_stats.requests, 0);
        assert_eq!(cold, warm, "cold and warm runs agree row for row");
    }

    #[test]
    fn batch_count_is_ceiling_of_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path()).unwrap();
        let gateway = mock_gateway(4);
        let texts: Vec<String> = (0..250).map(|i| format!("novel {i}")).collect();
        let (_, stats) = embed_with_cache(&gateway, &texts, &cache, 100).unwrap();
        assert_eq!(stats.requests, 3);
    }

    #[test]
    fn partial_cache_mixes_hits_and_misses_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::new(dir.path()).unwrap();
        let gateway = mock_gateway(5);

        let first: Vec<String> = vec!["a".into(), "b".into()];
        let (rows_ab, _) = embed_with_cache(&gateway, &first, &cache, 10).unwrap();

        let second: Vec<String> = vec!["c".into(), "a".into(), "b".into()];
        let (rows_cab, stats) = embed_with_cache(&gateway, &second, &cache, 10).unwrap();
        assert_eq!(stats.hits, 2);
        assert_eq!(stats.misses, 1);
        assert_eq!(rows_cab.row(1), rows_ab.row(0));
        assert_eq!(rows_cab.row(2), rows_ab.row(1));
    }

    #[test]
    fn projection_exports_one_row_per_input() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0, 0.5 * i as f64])
            .collect();
        let matrix = DenseMatrix::from_rows(&rows).unwrap();
        let ids: Vec<String> = (0..5).map(|i| format!("id{i}")).collect();
        let embeddings = EmbeddingMatrix::new(matrix, "m", ids).unwrap();
        let gold = vec![Some(SentimentLabel::Neutral); 5];
        let projection = export_projection(&embeddings, &gold, ProjectionMethod::Pca2D).unwrap();
        assert_eq!(projection.len(), 5);
    }

    #[test]
    fn collinear_points_have_zero_second_coordinate() {
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&t| vec![t, t, t])
            .collect();
        let matrix = DenseMatrix::from_rows(&rows).unwrap();
        let embeddings =
            EmbeddingMatrix::new(matrix, "m", (0..4).map(|i| i.to_string()).collect()).unwrap();
        let projection =
            export_projection(&embeddings, &[None; 4], ProjectionMethod::Pca2D).unwrap();
        for row in &projection {
            assert!(row.y.abs() < 1e-8, "y = {}", row.y);
        }
    }

    #[test]
    fn projection_csv_has_expected_header_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("proj.csv");
        let rows = vec![
            ProjectionRow {
                id: "1".into(),
                x: 0.5,
                y: -0.25,
                label: Some(SentimentLabel::Positive),
            },
            ProjectionRow {
                id: "2".into(),
                x: 1.5,
                y: 0.0,
                label: None,
            },
        ];
        write_projection_csv(&rows, &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        let mut lines = content.lines();
        assert_eq!(lines.next(), Some("id,x,y,label"));
        assert_eq!(lines.next(), Some("1,0.5,-0.25,positive"));
        assert_eq!(lines.next(), Some("2,1.5,0,"));
    }
}
