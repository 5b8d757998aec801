//! Reduce embeddings with PCA, inspect the explained-variance spectrum,
//! and export a 2-D projection suitable for plotting.
//!
//! The input here is synthetic: three well-separated clusters in 16
//! dimensions, so the first two components carry almost all the variance.
//!
//! ```bash
//! cargo run --example pca_projection
//! ```

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sentibench::corpus::SentimentLabel;
use sentibench::embedding::{
    export_projection, fit_pca, transform_pca, write_projection_csv, DenseMatrix,
    EmbeddingMatrix, ProjectionMethod,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three clusters, 60 points each, centred 8 units apart in a random
    // pair of the 16 dimensions.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (n, dim) = (180, 16);
    let mut x = DenseMatrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 3;
        for j in 0..dim {
            let center = if j == class { 8.0 } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            x.set(i, j, center + noise);
        }
        labels.push(Some(SentimentLabel::ALL[class]));
    }

    let model = fit_pca(&x, 6)?;
    println!("fitted PCA: {} components over dimension {}", model.k(), model.dim());
    println!("explained variance by component:");
    for (i, variance) in model.explained_variance.iter().enumerate() {
        let share = variance / model.total_variance;
        let bar = "#".repeat((share * 50.0).round() as usize);
        println!("  pc{:<2} {share:>7.4}  {bar}", i + 1);
    }
    println!("retained fraction at k = 6: {:.4}", model.retained_fraction());

    // Reconstruction error is the variance the kept components discard.
    let scores = transform_pca(&model, &x)?;
    let back = model.reconstruct(&scores)?;
    let mse: f64 = (0..n)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| (x.get(i, j) - back.get(i, j)).powi(2))
        .sum::<f64>()
        / (n as f64 - 1.0);
    println!("mean squared reconstruction error: {mse:.6}");

    // A 2-D projection for plotting, written as id,x,y,label CSV.
    let embeddings = EmbeddingMatrix::new(
        x,
        "synthetic-demo",
        (0..n).map(|i| i.to_string()).collect(),
    )?;
    let rows = export_projection(&embeddings, &labels, ProjectionMethod::Pca2D)?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("projection.csv");
    write_projection_csv(&rows, &path)?;
    let written = std::fs::read_to_string(&path)?;
    println!("\nfirst rows of {}:", path.display());
    for line in written.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
