//! Load a tab-separated tweet corpus, report its class distribution, and
//! show how malformed lines are quarantined rather than failing the run.
//!
//! ```bash
//! cargo run --example ingest_corpus
//! ```

use sentibench::corpus::{class_distribution, load_split, load_split_with, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("tweets.tsv");

    // The on-disk format is one tweet per line: id, gold label, text,
    // separated by tabs. Two of the lines below are deliberately broken.
    std::fs::write(
        &path,
        "\
101\tpositive\tJust landed the job!! best day ever\n\
102\tnegative\tmy train is delayed again, of course it is\n\
103\tneutral\tthe meeting moved to 3pm\n\
104\tpositive\tthis album is on repeat all week\n\
bad-line-without-tabs\n\
105\tsideways\tlabels outside the three classes are rejected\n\
106\tnegative\tbattery died halfway through the call\n",
    )?;

    // The default loader tolerates at most 1% malformed lines — a corpus
    // this broken is refused outright rather than silently thinned.
    match load_split(&path, Split::Train) {
        Err(err) => println!("strict load refused the file: {err}"),
        Ok(_) => unreachable!("2 of 7 lines are malformed"),
    }

    // With an explicit threshold the bad lines are quarantined instead.
    let outcome = load_split_with(&path, Split::Train, 0.5)?;
    println!(
        "\npermissive load kept {} tweets from the {} split",
        outcome.dataset.len(),
        outcome.dataset.split
    );

    println!("\nclass distribution:");
    for (label, count) in class_distribution(&outcome.dataset)? {
        println!("  {label:<8} {count}");
    }

    // Rejections carry line numbers and reasons so a corpus problem is
    // diagnosable without re-reading the file by hand.
    println!("\n{}", outcome.rejection_report());

    for tweet in &outcome.dataset.tweets {
        let gold = tweet.gold.map(|g| g.to_string()).unwrap_or_default();
        println!("  #{:<4} [{:<8}] {}", tweet.id, gold, tweet.text);
    }
    Ok(())
}
