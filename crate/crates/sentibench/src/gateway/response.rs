//! Wire-response deserialization and free-text sentiment parsing.
//!
//! Models answer the classification prompt in many shapes — a bare digit,
//! a sentence containing a digit, a label word, or refusal text. The parse
//! pipeline is fixed: a standalone `0`/`1`/`2` token wins first (the prompt
//! asks for a numeric score, so a digit is the model's direct answer), then
//! the leftmost label keyword, and anything else is `Unparseable`.

use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::{GatewayError, PredictedLabel};

/// `POST /chat/completions` response body (the subset we consume).
#[derive(Debug, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
pub struct ChatChoice {
    pub message: ChatChoiceMessage,
}

#[derive(Debug, Deserialize)]
pub struct ChatChoiceMessage {
    pub content: Option<String>,
}

/// `POST /completions` response body.
#[derive(Debug, Deserialize)]
pub struct CompletionResponse {
    pub choices: Vec<CompletionChoice>,
}

#[derive(Debug, Deserialize)]
pub struct CompletionChoice {
    pub text: String,
}

/// `POST /embeddings` response body.
#[derive(Debug, Deserialize)]
pub struct EmbeddingResponse {
    pub data: Vec<EmbeddingDatum>,
}

#[derive(Debug, Deserialize)]
pub struct EmbeddingDatum {
    pub index: usize,
    pub embedding: Vec<f64>,
}

impl ChatResponse {
    /// First choice's message content, or `MalformedResponse`.
    pub fn first_content(self) -> Result<String, GatewayError> {
        self.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::MalformedResponse("empty choices array".into()))
    }
}

impl CompletionResponse {
    /// First choice's text, or `MalformedResponse`.
    pub fn first_text(self) -> Result<String, GatewayError> {
        self.choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or_else(|| GatewayError::MalformedResponse("empty choices array".into()))
    }
}

impl EmbeddingResponse {
    /// Embedding rows sorted back into input order by their `index` field.
    pub fn rows_in_order(mut self) -> Result<Vec<Vec<f64>>, GatewayError> {
        if self.data.is_empty() {
            return Err(GatewayError::MalformedResponse("empty data array".into()));
        }
        self.data.sort_by_key(|d| d.index);
        Ok(self.data.into_iter().map(|d| d.embedding).collect())
    }
}

fn digit_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[012]\b").expect("valid regex"))
}

fn keyword_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(negative|neutral|positive|mixed)\b").expect("valid regex")
    })
}

/// Shared parse pipeline; `allow_mixed` controls whether the `mixed`
/// keyword maps to [`PredictedLabel::Mixed`] or is ignored (the fine-tuned
/// evaluation path restricts outputs to the three classes).
pub(crate) fn parse_with_keywords(raw: &str, allow_mixed: bool) -> PredictedLabel {
    if let Some(m) = digit_pattern().find(raw) {
        let code = m.as_str().as_bytes()[0] - b'0';
        return match code {
            0 => PredictedLabel::Negative,
            1 => PredictedLabel::Neutral,
            _ => PredictedLabel::Positive,
        };
    }
    for m in keyword_pattern().find_iter(raw) {
        match m.as_str().to_ascii_lowercase().as_str() {
            "negative" => return PredictedLabel::Negative,
            "neutral" => return PredictedLabel::Neutral,
            "positive" => return PredictedLabel::Positive,
            "mixed" if allow_mixed => return PredictedLabel::Mixed,
            // A "mixed" answer from a 3-class-restricted model: skip the
            // match and keep scanning for a usable keyword.
            _ => continue,
        }
    }
    PredictedLabel::Unparseable
}

/// Parses a free-text response from the chat classification strategy.
///
/// Pipeline, first match wins: (1) leftmost standalone digit 0/1/2 at word
/// boundaries; (2) leftmost case-insensitive keyword among
/// negative/neutral/positive/mixed; (3) `Unparseable`. When a digit and a
/// contradicting keyword both appear, the digit wins.
pub fn parse_sentiment_response(raw: &str) -> PredictedLabel {
    parse_with_keywords(raw, true)
}
