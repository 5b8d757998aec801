//! Drive the command-line interface end to end, in process: ingest a
//! corpus, run predictions with an interruption in the middle, resume,
//! and evaluate — all against the offline mock backend.
//!
//! The resume contract is the point here: predictions append to a CSV
//! keyed by tweet id, so a rerun skips finished work and only the missing
//! tweets cost backend requests.
//!
//! ```bash
//! cargo run --example resumable_cli
//! ```

use std::collections::BTreeMap;

use sentibench::cli::run_from;
use sentibench::gateway::counters;

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["sentibench".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    // An empty environment snapshot: everything comes from flags here.
    run_from(argv, &BTreeMap::new())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus = dir.path().join("tweets.tsv");
    let mut content = String::new();
    for i in 0..300 {
        let label = ["negative", "neutral", "positive"][i % 3];
        content.push_str(&format!("{i}\t{label}\ttweet number {i} from the demo corpus\n"));
    }
    std::fs::write(&corpus, content)?;
    let corpus = corpus.to_str().unwrap();

    let backend = "mock://cli-demo?seed=6&mode=gold-echo&epsilon=0.1";
    let out = dir.path().join("predictions.csv");
    let out_str = out.to_str().unwrap();

    println!("== ingest ==");
    assert_eq!(cli(&["ingest", corpus, "--split", "test"]), 0);

    // Simulate an interrupted run with --limit: only the first 120 tweets
    // are predicted before "the job dies".
    println!("\n== predict (interrupted after 120) ==");
    let before = counters::snapshot();
    let code = cli(&[
        "predict", corpus, "--backend-url", backend, "--out", out_str, "--limit", "120",
    ]);
    assert_eq!(code, 0);
    let mid = counters::snapshot();
    println!("backend chat requests so far: {}", mid.chat - before.chat);

    // The resumed run picks up at tweet 120; the already-written rows
    // cost nothing.
    println!("\n== predict (resumed) ==");
    assert_eq!(cli(&["predict", corpus, "--backend-url", backend, "--out", out_str]), 0);
    let after = counters::snapshot();
    println!("backend chat requests in the resumed run: {}", after.chat - mid.chat);

    // A third run finds nothing to do.
    println!("\n== predict (already complete) ==");
    assert_eq!(cli(&["predict", corpus, "--backend-url", backend, "--out", out_str]), 0);
    let done = counters::snapshot();
    assert_eq!(done.chat, after.chat, "complete runs make no backend requests");

    println!("\nfirst prediction rows:");
    let written = std::fs::read_to_string(&out)?;
    for line in written.lines().take(4) {
        println!("  {line}");
    }

    println!("\n== evaluate ==");
    let reports = dir.path().join("reports");
    let code = cli(&[
        "evaluate", corpus, "--predictions", out_str, "--out", reports.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    println!("\nfiles written:");
    for entry in std::fs::read_dir(&reports)? {
        println!("  {}", entry?.path().display());
    }
    Ok(())
}
