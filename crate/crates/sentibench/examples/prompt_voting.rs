//! Classify tweets with the prompt strategy: the classification prompt is
//! sent three times per tweet and the votes are folded into one label by
//! strict majority, with ties falling back to neutral.
//!
//! Runs entirely offline against the deterministic mock backend.
//!
//! ```bash
//! cargo run --example prompt_voting
//! ```

use sentibench::corpus::Tweet;
use sentibench::gateway::prompts::{render_classification_messages, CLASSIFICATION_PROMPT};
use sentibench::gateway::{majority_vote, BackendConfig, Gateway, PredictedLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // `mode=dist` samples labels from a sentiment distribution seeded per
    // payload, so repeated runs (and repeated votes on the same tweet with
    // the same payload) are reproducible.
    let config = BackendConfig::new("mock://example?seed=42&mode=dist", "gpt-3.5-turbo");
    let gateway = Gateway::from_config(config)?;

    let tweets = [
        Tweet::unlabeled("1", "this new phone camera is unreal, so crisp"),
        Tweet::unlabeled("2", "commute was fine, nothing to report"),
        Tweet::unlabeled("3", "customer service hung up on me twice today"),
    ];

    println!("system prompt sent with every vote:\n  {CLASSIFICATION_PROMPT}\n");

    for tweet in &tweets {
        // What actually goes over the wire for one vote:
        let messages = render_classification_messages(tweet)?;
        println!("tweet #{}: {:?}", tweet.id, tweet.text);
        println!("  user message: {:?}", messages[1].content);

        let prediction = gateway.predict_prompt_strategy(tweet)?;
        println!("  votes: {:?}", prediction.raw_responses);
        println!("  voted: {} (tie: {})\n", prediction.voted, prediction.tie);
    }

    // The vote combinator is also usable directly.
    let split_decision = [
        PredictedLabel::Positive,
        PredictedLabel::Negative,
        PredictedLabel::Neutral,
    ];
    let (label, tie) = majority_vote(&split_decision)?;
    println!("a 1/1/1 split has no majority: voted {label}, tie = {tie}");

    let with_noise = [
        PredictedLabel::Positive,
        PredictedLabel::Unparseable,
        PredictedLabel::Positive,
    ];
    let (label, tie) = majority_vote(&with_noise)?;
    println!("unparseable votes are dropped before counting: voted {label}, tie = {tie}");
    Ok(())
}
