//! Tag tweets with the linguistic-nuance categories — emoji, slang,
//! hashtags, negation/sarcasm cues, mixed sentiment, cultural context,
//! and modern abbreviations — then break model accuracy down by category
//! to see where a classifier struggles.
//!
//! ```bash
//! cargo run --example nuance_analysis
//! ```

use std::collections::{BTreeMap, HashMap};

use sentibench::corpus::{Dataset, SentimentLabel, Split, Tweet};
use sentibench::gateway::{BackendConfig, Gateway, PredictedLabel};
use sentibench::nuance::{breakdown_to_csv, nuance_breakdown, tag_contrast, tag_dataset, tag_emoji, tag_hashtag, tag_lexicon, LexiconSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // The individual taggers return the evidence they matched.
    let samples = [
        "Just aced my exam #dead",
        "this party is sick 🔥🔥",
        "tbh the new update is mid, ngl",
        "I really love the camera on this new phone, but the battery life is awful",
        "that match was the dog's bollocks",
    ];
    println!("per-tweet tagger evidence:");
    let lexicons = LexiconSet::default();
    for text in samples {
        println!("  {text:?}");
        let emoji = tag_emoji(text);
        if !emoji.is_empty() {
            println!("    emoji:         {emoji:?}");
        }
        let hashtags = tag_hashtag(text);
        if !hashtags.is_empty() {
            println!("    hashtags:      {hashtags:?}");
        }
        let slang = tag_lexicon(text, &lexicons.slang);
        if !slang.is_empty() {
            println!("    slang:         {slang:?}");
        }
        let abbreviations = tag_lexicon(text, &lexicons.abbreviations);
        if !abbreviations.is_empty() {
            println!("    abbreviations: {abbreviations:?}");
        }
        let contrast = tag_contrast(text);
        if !contrast.is_empty() {
            println!("    contrast:      {contrast:?}");
        }
    }

    // Category-level accuracy breakdown over a labeled dataset.
    let tweets = vec![
        Tweet::labeled("1", "this party is sick 🔥", SentimentLabel::Positive),
        Tweet::labeled("2", "Just aced my exam #dead", SentimentLabel::Positive),
        Tweet::labeled("3", "tbh the service was mid", SentimentLabel::Negative),
        Tweet::labeled("4", "great camera but awful battery", SentimentLabel::Neutral),
        Tweet::labeled("5", "the schedule moved to friday", SentimentLabel::Neutral),
        Tweet::labeled("6", "full of beans after that coffee", SentimentLabel::Positive),
    ];
    let dataset = Dataset::new(Split::Test, tweets)?;
    let tags = tag_dataset(&dataset, &lexicons, &BTreeMap::new());
    println!("\nautomatic tags:");
    for (id, tag) in &tags {
        let categories: Vec<&str> = tag.categories.iter().map(|c| c.canonical_name()).collect();
        println!("  #{:<3} {}", id, categories.join(", "));
    }

    // Predictions from the mock backend stand in for a real model run;
    // epsilon 0.3 gives the breakdown some errors to report.
    let gateway = Gateway::from_config(BackendConfig::new(
        "mock://nuance-demo?seed=4&mode=gold-echo&epsilon=0.3",
        "gpt-3.5-turbo",
    ))?;
    let text_gold: HashMap<String, SentimentLabel> = dataset
        .tweets
        .iter()
        .filter_map(|t| t.gold.map(|g| (t.text.clone(), g)))
        .collect();
    gateway.install_gold(&text_gold);

    let mut predictions: BTreeMap<String, PredictedLabel> = BTreeMap::new();
    let mut gold: BTreeMap<String, SentimentLabel> = BTreeMap::new();
    for tweet in &dataset.tweets {
        let prediction = gateway.predict_prompt_strategy(tweet)?;
        predictions.insert(tweet.id.clone(), prediction.voted);
        gold.insert(tweet.id.clone(), tweet.gold.expect("labeled above"));
    }

    let breakdown = nuance_breakdown(&predictions, &gold, &tags);
    println!("\naccuracy by nuance category:");
    for (category, cell) in &breakdown {
        println!(
            "  {:<22} tagged {:<3} accuracy {:.3}",
            category.canonical_name(),
            cell.tweet_count,
            cell.report.accuracy
        );
    }

    println!("\nCSV export:\n{}", breakdown_to_csv(&breakdown));
    Ok(())
}
