//! Turn free-form model responses into sentiment labels. Models rarely
//! answer with a bare digit, so the parser accepts scores embedded in
//! prose, label words, and common decorations — and refuses to guess when
//! a response mentions two different scores.
//!
//! ```bash
//! cargo run --example parse_responses
//! ```

use sentibench::gateway::parse_sentiment_response;

fn main() {
    let responses = [
        // The prompt asks for a 0/1/2 score; the clean case is a digit.
        "2",
        "0",
        // Scores wrapped in prose or punctuation still parse.
        "Sentiment score: 1",
        "I would rate this tweet a 2 out of 2.",
        "  1 ",
        "\"0\"",
        // Label words work when no digit is present.
        "positive",
        "This tweet is clearly Negative.",
        "NEUTRAL",
        // Ambiguous or off-scale responses are unparseable, not guessed at.
        "either a 1 or a 2, hard to say",
        "7",
        "as an assistant I cannot rate tweets",
        "",
    ];

    println!("{:<45} -> label", "raw response");
    println!("{}", "-".repeat(60));
    for raw in responses {
        println!("{:<45} -> {}", format!("{raw:?}"), parse_sentiment_response(raw));
    }
}
