//! Tour of the offline mock backend. The mock speaks the same trait as
//! the HTTP client but derives every response from a hash of
//! (seed, model id, request payload), so runs are deterministic and need
//! no network or API key.
//!
//! The URL query string selects the behaviour:
//!
//! * `seed=N` — RNG seed mixed into every response
//! * `mode=dist` — sample labels from a fixed sentiment distribution
//! * `mode=gold-echo&epsilon=E` — echo the installed gold label, flipping
//!   it with probability E (a backend with a known accuracy of 1 − E)
//! * `mode=echo` — echo a canned acknowledgement (useful for wiring tests)
//! * `dim=D` — embedding dimension (default 64)
//!
//! ```bash
//! cargo run --example mock_backend
//! ```

use std::collections::HashMap;

use sentibench::corpus::{SentimentLabel, Tweet};
use sentibench::gateway::{BackendConfig, Gateway};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Determinism: the same seed gives byte-identical responses, and a
    // different seed gives a different (but equally reproducible) model.
    let tweets: Vec<Tweet> = ["the weather turned out lovely", "queue was endless", "new season drops friday"]
        .iter()
        .enumerate()
        .map(|(i, text)| Tweet::unlabeled(i.to_string(), *text))
        .collect();
    let a = Gateway::from_config(BackendConfig::new("mock://demo?seed=7&mode=dist", "m"))?;
    let b = Gateway::from_config(BackendConfig::new("mock://demo?seed=7&mode=dist", "m"))?;
    let c = Gateway::from_config(BackendConfig::new("mock://demo?seed=8&mode=dist", "m"))?;
    for (name, gateway) in [("seed 7, run 1", &a), ("seed 7, run 2", &b), ("seed 8       ", &c)] {
        let votes: Vec<String> = tweets
            .iter()
            .map(|t| Ok(gateway.predict_prompt_strategy(t)?.voted.to_string()))
            .collect::<Result<_, Box<dyn std::error::Error>>>()?;
        println!("{name}: {votes:?}");
    }

    // Gold-echo: install gold labels keyed by tweet text, then measure a
    // backend that is right exactly 90% of the time.
    let noisy = Gateway::from_config(BackendConfig::new(
        "mock://demo?seed=1&mode=gold-echo&epsilon=0.1",
        "m",
    ))?;
    let mut gold = HashMap::new();
    let tweets: Vec<Tweet> = (0..1000)
        .map(|i| {
            let label = SentimentLabel::ALL[i % 3];
            let tweet = Tweet::labeled(i.to_string(), format!("synthetic tweet number {i}"), label);
            gold.insert(tweet.text.clone(), label);
            tweet
        })
        .collect();
    noisy.install_gold(&gold);

    let mut correct = 0usize;
    for tweet in &tweets {
        let prediction = noisy.predict_prompt_strategy(tweet)?;
        if prediction.voted.as_sentiment() == tweet.gold {
            correct += 1;
        }
    }
    println!(
        "\ngold-echo with epsilon = 0.1: {}/{} correct ({:.1}% — expected near 90%)",
        correct,
        tweets.len(),
        100.0 * correct as f64 / tweets.len() as f64
    );

    // Embeddings are deterministic too, with the dimension set by `dim`.
    let embedder = Gateway::from_config(BackendConfig::new(
        "mock://demo?seed=3&dim=8",
        "text-embedding-ada-002",
    ))?;
    let rows = embedder.embed(&["first text".to_string(), "second text".to_string()])?;
    for (i, row) in rows.iter().enumerate() {
        let preview: Vec<String> = row.iter().take(4).map(|v| format!("{v:+.3}")).collect();
        println!("embedding {i}: dim {} [{} ...]", row.len(), preview.join(", "));
    }
    Ok(())
}
