//! The fixed prompt texts and their rendering into wire messages.
//!
//! The classification instruction and the reasoning template are frozen
//! byte-for-byte (including the idiosyncratic capitalisation of "Your");
//! downstream parsing assumes the 0–2 numeric scale they establish.

use crate::corpus::Tweet;

use super::{GatewayError, Message};

/// System instruction for the chat-completion classification strategy.
pub const CLASSIFICATION_PROMPT: &str = "As a social scientist, Your task is to analyze the sentiment of a series of user tweets extracted from Twitter. Please assign a sentiment score from 0 to 2 for each tweet, where 0 signifies negative sentiment, 1 indicates neutral sentiment, and 2 corresponds to positive sentiment. In situations where the sentiment is difficult to definitively classify, please provide your best estimation of the sentiment score.";

const REASONING_BEFORE: &str = "Consider the following statement: '";
const REASONING_AFTER: &str = "'. Please conduct a sentiment analysis on this statement. Could you identify the sentiment expressed in this statement and provide a detailed explanation of the rationale behind your assessment.";

/// Builds the two-message sequence for classifying one tweet: the fixed
/// system instruction plus the tweet text, passed through unmodified.
pub fn render_classification_messages(tweet: &Tweet) -> Result<Vec<Message>, GatewayError> {
    if tweet.text.trim().is_empty() {
        return Err(GatewayError::InvalidInput(format!(
            "tweet {:?} has empty text",
            tweet.id
        )));
    }
    Ok(vec![
        Message::system(CLASSIFICATION_PROMPT),
        Message::user(tweet.text.clone()),
    ])
}

/// Renders the reasoning prompt with `statement` substituted verbatim.
pub fn render_reasoning_prompt(statement: &str) -> Result<String, GatewayError> {
    if statement.trim().is_empty() {
        return Err(GatewayError::InvalidInput(
            "reasoning statement is empty".into(),
        ));
    }
    Ok(format!("{REASONING_BEFORE}{statement}{REASONING_AFTER}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Role;

    #[test]
    fn classification_messages_wrap_tweet_text() {
        let tweet = Tweet::unlabeled("1", "hi");
        let messages = render_classification_messages(&tweet).unwrap();
        assert_eq!(messages.len(), 2);
        assert_eq!(messages[0].role, Role::System);
        assert_eq!(messages[0].content, CLASSIFICATION_PROMPT);
        assert!(messages[0].content.starts_with("As a social scientist, Your task"));
        assert_eq!(messages[1].role, Role::User);
        assert_eq!(messages[1].content, "hi");
    }

    #[test]
    fn user_content_is_passed_through_unmodified() {
        let text = "emoji 😀 and \"quotes\" and 'apostrophes' survive";
        let tweet = Tweet::unlabeled("1", text);
        let messages = render_classification_messages(&tweet).unwrap();
        assert_eq!(messages[1].content, text);
    }

    #[test]
    fn empty_tweet_text_is_rejected() {
        let tweet = Tweet::unlabeled("1", "   ");
        assert!(render_classification_messages(&tweet).is_err());
    }

    #[test]
    fn reasoning_prompt_substitutes_statement() {
        let prompt = render_reasoning_prompt("I love it").unwrap();
        assert_eq!(
            prompt,
            "Consider the following statement: 'I love it'. Please conduct a sentiment \
             analysis on this statement. Could you identify the sentiment expressed in this \
             statement and provide a detailed explanation of the rationale behind your \
             assessment."
        );
    }

    #[test]
    fn reasoning_prompt_keeps_apostrophes_verbatim() {
        let prompt = render_reasoning_prompt("it's the dog's bollocks").unwrap();
        assert!(prompt.contains("'it's the dog's bollocks'."));
    }

    #[test]
    fn reasoning_prompt_rejects_empty_statement() {
        assert!(render_reasoning_prompt("").is_err());
        assert!(render_reasoning_prompt("  \t ").is_err());
    }
}
