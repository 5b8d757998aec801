//! Prepare a fine-tuning dataset in the JSONL prompt/completion format,
//! validate the written file, and query a (mock) fine-tuned completion
//! model whose outputs are restricted to the three class words.
//!
//! ```bash
//! cargo run --example finetune_prep
//! ```

use sentibench::corpus::{SentimentLabel, Tweet};
use sentibench::finetune::{
    predict_finetuned, to_finetune_record, validate_finetune_file, write_finetune_file,
    FinetuneOptions,
};
use sentibench::gateway::{BackendConfig, Gateway};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let options = FinetuneOptions::default();
    println!(
        "prompt separator: {:?}   completion stop: {:?}\n",
        options.separator, options.stop
    );

    let tweets = [
        Tweet::labeled("1", "screen cracked on day two, never again", SentimentLabel::Negative),
        Tweet::labeled("2", "package arrived on schedule", SentimentLabel::Neutral),
        Tweet::labeled("3", "upgrade went perfectly, love the speed", SentimentLabel::Positive),
        Tweet::labeled("4", "they cancelled my favourite show AGAIN", SentimentLabel::Negative),
        Tweet::labeled("5", "new cafe on the corner is actually great", SentimentLabel::Positive),
        Tweet::labeled("6", "bus replaced by rail works this weekend", SentimentLabel::Neutral),
    ];

    // Each record is the preprocessed text plus separator as the prompt,
    // and the gold label (with a leading space) as the completion.
    let records: Vec<_> = tweets
        .iter()
        .map(|t| to_finetune_record(t, &options))
        .collect::<Result<_, _>>()?;
    println!("first record as JSON:");
    println!("  {}\n", serde_json::to_string(&records[0])?);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("train.jsonl");
    let written = write_finetune_file(&records, &path)?;
    println!("wrote {written} lines to {}", path.display());

    // Validation re-reads the file from disk and checks the invariants a
    // fine-tuning endpoint cares about: two keys per object, completions
    // drawn from the 3-word set, prompts ending with the separator.
    let (parsed, summary) = validate_finetune_file(&path, &options)?;
    println!(
        "validated {} lines: {} negative / {} neutral / {} positive completions",
        summary.lines,
        summary.completions_negative,
        summary.completions_neutral,
        summary.completions_positive
    );
    assert_eq!(parsed.len(), written);

    // Evaluating a fine-tuned model sends the prompt to the completions
    // endpoint and parses the stop-terminated answer. The mock stands in
    // for a real fine-tune here.
    let gateway = Gateway::from_config(BackendConfig::new(
        "mock://finetune?seed=5&mode=dist",
        "davinci-ft-demo",
    ))?;
    println!("\npredictions from the stand-in model:");
    for tweet in &tweets {
        let prediction = predict_finetuned(&gateway, tweet, &options)?;
        println!(
            "  #{} -> {} (raw: {:?})",
            tweet.id, prediction.voted, prediction.raw_responses[0]
        );
    }
    Ok(())
}
