//! Embed a dataset through the disk cache: the first pass hits the
//! backend, the second is served entirely from cache, and half-cached
//! batches only fetch the missing rows.
//!
//! ```bash
//! cargo run --example embedding_pipeline
//! ```

use sentibench::corpus::{Dataset, Split, Tweet};
use sentibench::embedding::{embed_dataset, EmbeddingCache, PreprocessOptions};
use sentibench::gateway::{counters, BackendConfig, Gateway};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = Gateway::from_config(BackendConfig::new(
        "mock://embed-demo?seed=2&dim=16",
        "text-embedding-ada-002",
    ))?;

    let tweets: Vec<Tweet> = (0..10)
        .map(|i| Tweet::unlabeled(i.to_string(), format!("this is the tweet number {i}")))
        .collect();
    let dataset = Dataset::new(Split::Custom, tweets)?;

    let dir = tempfile::tempdir()?;
    let cache = EmbeddingCache::new(dir.path())?;
    let options = PreprocessOptions::default();

    // Cold cache: every row is a miss and goes to the backend in batches.
    let before = counters::snapshot();
    let (embeddings, stats) = embed_dataset(&gateway, &dataset, &options, &cache, 4)?;
    println!(
        "cold pass:  {} rows at dim {}; {} hits, {} misses, {} backend requests",
        embeddings.rows(),
        embeddings.dim(),
        stats.hits,
        stats.misses,
        stats.requests
    );

    // Warm cache: zero backend traffic, verified through the process-wide
    // request counters.
    let mid = counters::snapshot();
    let (again, stats) = embed_dataset(&gateway, &dataset, &options, &cache, 4)?;
    println!(
        "warm pass:  {} rows; {} hits, {} misses, {} backend requests",
        again.rows(),
        stats.hits,
        stats.misses,
        stats.requests
    );
    let after = counters::snapshot();
    println!(
        "backend embedding calls: cold pass {}, warm pass {}",
        mid.embed - before.embed,
        after.embed - mid.embed
    );
    assert_eq!(embeddings.matrix.row(3), again.matrix.row(3));

    // Cache entries are keyed by model id and preprocessed text, so a
    // preprocessing change that alters the text re-embeds instead of
    // serving stale rows ("this", "is", "the" are stopwords here).
    let stripped = PreprocessOptions {
        remove_stopwords: true,
        ..options
    };
    let (_, stats) = embed_dataset(&gateway, &dataset, &stripped, &cache, 4)?;
    println!(
        "with stopwords removed: {} hits, {} misses (cache does not serve stale text)",
        stats.hits, stats.misses
    );
    Ok(())
}
