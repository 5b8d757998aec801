//! Text normalization applied before embedding.
//!
//! The steps run in a fixed order: Unicode NFC normalization, control
//! character removal, URL and @-mention replacement, whitespace collapse,
//! then optional lowercasing and stopword removal. Order matters — URLs
//! are replaced before lowercasing so the placeholder never contains
//! case-mangled scheme text, and whitespace collapses before tokenized
//! stopword removal.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Placeholder substituted for URLs.
pub const URL_PLACEHOLDER: &str = "<url>";
/// Placeholder substituted for @-mentions.
pub const USER_PLACEHOLDER: &str = "<user>";

/// Small function-word list for the optional stopword filter.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "by", "for", "from", "had", "has", "have",
    "he", "her", "his", "i", "in", "is", "it", "its", "of", "on", "or", "she", "that", "the",
    "their", "them", "they", "this", "to", "was", "we", "were", "will", "with", "you",
];

/// Switches for the two optional preprocessing steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub lowercase: bool,
    pub remove_stopwords: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            lowercase: true,
            remove_stopwords: false,
        }
    }
}

fn url_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").expect("valid regex"))
}

fn mention_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"@\w+").expect("valid regex"))
}

/// Normalizes one tweet for embedding.
pub fn preprocess(text: &str, options: &PreprocessOptions) -> String {
    let normalized: String = text.nfc().collect();
    // Control characters are dropped unless they count as whitespace
    // (\n, \t, …), which the collapse below folds into single spaces.
    let cleaned: String = normalized
        .chars()
        .filter(|c| !c.is_control() || c.is_whitespace())
        .collect();
    let cleaned = url_pattern().replace_all(&cleaned, URL_PLACEHOLDER);
    let cleaned = mention_pattern().replace_all(&cleaned, USER_PLACEHOLDER);
    let collapsed = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    let cased = if options.lowercase {
        collapsed.to_lowercase()
    } else {
        collapsed
    };
    if !options.remove_stopwords {
        return cased;
    }
    cased
        .split(' ')
        .filter(|token| {
            let lowered = token.to_lowercase();
            !STOPWORDS.contains(&lowered.as_str())
        })
        .collect::<Vec<_>>()
        .join(" ")
}
