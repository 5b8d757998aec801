//! Train the embedding-based classifiers end to end: reduce features with
//! PCA, fit both tree ensembles, tune them with a small hyperparameter
//! grid search, and persist the result as a single pipeline file that can
//! be reloaded for inference.
//!
//! The feature matrix here is synthetic — three Gaussian clusters, one
//! per class — standing in for text embeddings so the ensembles have real
//! signal to learn and held-out accuracy means something. A real run gets
//! the matrix from `embed_dataset` instead (see the `embedding_pipeline`
//! example); the two are interchangeable from this point on.
//!
//! ```bash
//! cargo run --example train_and_classify
//! ```

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sentibench::corpus::SentimentLabel;
use sentibench::embedding::{
    fit_pca, grid_search, load_model, save_model, train_classifier, transform_pca,
    ClassifierKind, DenseMatrix, ModelFile, PipelineModel, PreprocessOptions, TrainOptions,
};

/// Cluster features: class c is offset by +4 along coordinate c, with
/// unit Gaussian noise everywhere.
fn clusters(n: usize, dim: usize, seed: u64) -> (DenseMatrix, Vec<SentimentLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::zeros(n, dim);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 3;
        for j in 0..dim {
            let center = if j == class { 4.0 } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            x.set(i, j, center + noise);
        }
        y.push(SentimentLabel::ALL[class]);
    }
    (x, y)
}

fn accuracy(predicted: &[SentimentLabel], gold: &[SentimentLabel]) -> f64 {
    let correct = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    correct as f64 / gold.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (train_x, train_y) = clusters(240, 24, 11);
    let (test_x, test_y) = clusters(90, 24, 12);

    let pca = fit_pca(&train_x, 8)?;
    let train_features = transform_pca(&pca, &train_x)?;
    let test_features = transform_pca(&pca, &test_x)?;
    println!(
        "reduced dimension {} to {} PCA features ({:.3} variance retained)\n",
        pca.dim(),
        pca.k(),
        pca.retained_fraction()
    );

    // Both ensembles, same seed; training is deterministic.
    for kind in [ClassifierKind::RandomForest, ClassifierKind::GradientBoostedTrees] {
        let model = train_classifier(&train_features, &train_y, &TrainOptions::new(kind, 42))?;
        println!(
            "{kind}: train accuracy {:.3}, held-out accuracy {:.3}",
            accuracy(&model.predict(&train_features)?, &train_y),
            accuracy(&model.predict(&test_features)?, &test_y)
        );
    }

    // A coarse grid search over depth and ensemble size, scored on a
    // seeded holdout fold.
    let report = grid_search(
        &train_features,
        &train_y,
        &TrainOptions::new(ClassifierKind::RandomForest, 42),
        &[2, 4, 8],
        &[20, 60],
    )?;
    println!("\ngrid search ({} combinations):", report.entries.len());
    for entry in &report.entries {
        println!(
            "  depth {:>2}, size {:>3} -> validation accuracy {:.3}",
            entry.max_depth, entry.ensemble_size, entry.validation_accuracy
        );
    }
    println!(
        "best: depth {}, size {} at {:.3}",
        report.best.max_depth, report.best.ensemble_size, report.best.validation_accuracy
    );

    // Persist everything inference needs as one file: the embedding model
    // the features came from, the preprocessing switches, the PCA basis,
    // and the refit winner from the grid search.
    let pipeline = PipelineModel {
        embedding_model_id: "synthetic-demo".to_string(),
        preprocess: PreprocessOptions::default(),
        pca: Some(pca),
        classifier: report.model,
    };
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("sentiment.sgtm");
    save_model(&ModelFile::Pipeline(pipeline), &path)?;
    println!("\nsaved pipeline to {}", path.display());

    let reloaded = load_model(&path)?;
    println!("reloaded model kind: {}", reloaded.kind_name());
    let ModelFile::Pipeline(pipeline) = reloaded else {
        unreachable!("just saved a pipeline");
    };
    let features = transform_pca(pipeline.pca.as_ref().unwrap(), &test_x)?;
    println!(
        "reloaded pipeline held-out accuracy: {:.3}",
        accuracy(&pipeline.classifier.predict(&features)?, &test_y)
    );
    Ok(())
}
