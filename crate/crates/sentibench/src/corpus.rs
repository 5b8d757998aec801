//! Tweet corpus loading and validation for SemEval-style distributions.
//!
//! Input files are tab-separated UTF-8 text, one record per line, with
//! fields `id`, `label`, `text`. Labels may be the words
//! `negative`/`neutral`/`positive` (any case) or the numeric codes
//! `0`/`1`/`2`. Lines that fail to parse are collected into a rejection
//! report rather than silently dropped; a load fails outright when the
//! rejection rate exceeds a configurable threshold.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Three-point sentiment scale carried by gold annotations.
///
/// The numeric codes follow the classification prompt's scale:
/// 0 = negative, 1 = neutral, 2 = positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    /// All labels in numeric-code order.
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    /// Numeric code on the 0–2 scale.
    pub fn code(self) -> u8 {
        match self {
            SentimentLabel::Negative => 0,
            SentimentLabel::Neutral => 1,
            SentimentLabel::Positive => 2,
        }
    }

    /// Inverse of [`code`](Self::code); `None` for codes outside 0–2.
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SentimentLabel::Negative),
            1 => Some(SentimentLabel::Neutral),
            2 => Some(SentimentLabel::Positive),
            _ => None,
        }
    }

    /// Lowercase label word as used in dataset files.
    pub fn word(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }

    /// Parses a label word case-insensitively.
    pub fn from_word(word: &str) -> Option<Self> {
        match word.trim().to_ascii_lowercase().as_str() {
            "negative" => Some(SentimentLabel::Negative),
            "neutral" => Some(SentimentLabel::Neutral),
            "positive" => Some(SentimentLabel::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// One corpus record: an opaque id, the tweet text, and an optional gold label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub gold: Option<SentimentLabel>,
}

impl Tweet {
    /// Convenience constructor for labeled tweets.
    pub fn labeled(id: impl Into<String>, text: impl Into<String>, gold: SentimentLabel) -> Self {
        Tweet {
            id: id.into(),
            text: text.into(),
            gold: Some(gold),
        }
    }

    /// Convenience constructor for unlabeled tweets.
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            text: text.into(),
            gold: None,
        }
    }
}

/// Which portion of a corpus a dataset represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
    Custom,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Custom => "custom",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "custom" => Ok(Split::Custom),
            other => Err(format!("unknown split {other:?} (expected train, test, or custom)")),
        }
    }
}

/// An ordered collection of tweets with unique ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub tweets: Vec<Tweet>,
}

impl Dataset {
    /// Builds a dataset, enforcing id uniqueness.
    pub fn new(split: Split, tweets: Vec<Tweet>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for tweet in &tweets {
            if !seen.insert(tweet.id.as_str()) {
                return Err(CorpusError::DuplicateId(tweet.id.clone()));
            }
        }
        Ok(Dataset { split, tweets })
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }
}

/// Per-class gold-label counts; every label has an entry, absent classes count 0.
pub fn class_distribution(dataset: &Dataset) -> Result<BTreeMap<SentimentLabel, usize>, CorpusError> {
    let mut counts: BTreeMap<SentimentLabel, usize> =
        SentimentLabel::ALL.iter().map(|&l| (l, 0)).collect();
    for tweet in &dataset.tweets {
        let gold = tweet
            .gold
            .ok_or_else(|| CorpusError::MissingGold(tweet.id.clone()))?;
        *counts.get_mut(&gold).expect("all labels present") += 1;
    }
    Ok(counts)
}

/// Line-level input format. Only the SemEval tab-separated layout is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineFormat {
    TabSeparated,
}

/// Why a single line could not be parsed.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseLineError {
    #[error("expected at least 3 tab-separated fields, found {0}")]
    MalformedLine(usize),
    #[error("unrecognized sentiment label {0:?}")]
    UnknownLabel(String),
    #[error("tweet text is empty")]
    EmptyText,
}

/// Corpus-level failures.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{rejected} of {total} lines rejected, above the {percent:.2}% threshold", percent = threshold * 100.0)]
    TooManyRejects {
        rejected: usize,
        total: usize,
        threshold: f64,
    },
    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),
    #[error("tweet {0:?} carries no gold label")]
    MissingGold(String),
}

/// One rejected input line: its 1-based line number and the reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Result of a file load: the accepted dataset plus the rejection report.
#[derive(Debug)]
pub struct LoadOutcome {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

impl LoadOutcome {
    /// Renders the rejection report as line-oriented text.
    pub fn rejection_report(&self) -> String {
        let mut out = String::new();
        for r in &self.rejections {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Default ceiling on the tolerated rejection rate.
pub const DEFAULT_REJECT_THRESHOLD: f64 = 0.01;

/// Parses one dataset line into a [`Tweet`].
///
/// Fields beyond the third are treated as part of the text (interior tabs
/// are preserved by rejoining); the text is trimmed of surrounding
/// whitespace. Deterministic and pure.
pub fn parse_dataset_line(line: &str, format: LineFormat) -> Result<Tweet, ParseLineError> {
    let LineFormat::TabSeparated = format;
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 3 {
        return Err(ParseLineError::MalformedLine(fields.len()));
    }
    let id = fields[0].trim();
    let label_field = fields[1].trim();
    let gold = match label_field {
        "0" | "1" | "2" => SentimentLabel::from_code(label_field.as_bytes()[0] - b'0'),
        word => SentimentLabel::from_word(word),
    }
    .ok_or_else(|| ParseLineError::UnknownLabel(label_field.to_string()))?;
    let text = fields[2..].join("\t");
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseLineError::EmptyText);
    }
    Ok(Tweet::labeled(id, text, gold))
}

/// Loads a split with the default 1% rejection threshold.
pub fn load_split(path: impl AsRef<Path>, split: Split) -> Result<LoadOutcome, CorpusError> {
    load_split_with(path, split, DEFAULT_REJECT_THRESHOLD)
}

/// Loads a split, rejecting bad lines and duplicate ids (first occurrence
/// wins). Blank lines are skipped without counting as rejections. Fails
/// with [`CorpusError::TooManyRejects`] when the rejection rate exceeds
/// `threshold` (a fraction of non-blank lines).
pub fn load_split_with(
    path: impl AsRef<Path>,
    split: Split,
    threshold: f64,
) -> Result<LoadOutcome, CorpusError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut tweets = Vec::new();
    let mut rejections = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut considered = 0usize;

    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        considered += 1;
        match parse_dataset_line(line, LineFormat::TabSeparated) {
            Ok(tweet) => {
                if seen.contains(tweet.id.as_str()) {
                    rejections.push(Rejection {
                        line: line_no,
                        reason: format!("duplicate id {:?} (first occurrence kept)", tweet.id),
                    });
                } else {
                    seen.insert(tweet.id.clone());
                    tweets.push(tweet);
                }
            }
            Err(err) => rejections.push(Rejection {
                line: line_no,
                reason: err.to_string(),
            }),
        }
    }

    if considered > 0 && (rejections.len() as f64) > threshold * (considered as f64) {
        return Err(CorpusError::TooManyRejects {
            rejected: rejections.len(),
            total: considered,
            threshold,
        });
    }

    let dataset = Dataset::new(split, tweets)?;
    Ok(LoadOutcome {
        dataset,
        rejections,
    })
}
