//! Fine-tuning file preparation and evaluation of fine-tuned completion
//! models under the 3-class output restriction.
//!
//! Records follow the legacy completion fine-tune conventions: the prompt
//! is the tweet text plus a separator suffix, the completion is a lowercase
//! label word with one leading space, and generation stops at a newline.
//! All three conventions are configurable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Tweet;
use crate::gateway::response::parse_with_keywords;
use crate::gateway::{Gateway, GatewayError, PredictedLabel, Prediction, Strategy};

/// Default prompt separator suffix.
pub const DEFAULT_SEPARATOR: &str = "\n\n###\n\n";
/// Default stop sequence for evaluation completions.
pub const DEFAULT_STOP: &str = "\n";

/// Formatting conventions for fine-tune records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinetuneOptions {
    pub separator: String,
    pub stop: String,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        FinetuneOptions {
            separator: DEFAULT_SEPARATOR.to_string(),
            stop: DEFAULT_STOP.to_string(),
        }
    }
}

/// One JSONL training example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub prompt: String,
    pub completion: String,
}

/// Fine-tune preparation and validation failures.
#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("tweet {0:?} carries no gold label")]
    MissingGold(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no records to write")]
    EmptyInput,
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
}

/// Converts one labeled tweet into a fine-tune record.
pub fn to_finetune_record(
    tweet: &Tweet,
    options: &FinetuneOptions,
) -> Result<FinetuneRecord, FinetuneError> {
    let gold = tweet
        .gold
        .ok_or_else(|| FinetuneError::MissingGold(tweet.id.clone()))?;
    Ok(FinetuneRecord {
        prompt: format!("{}{}", tweet.text, options.separator),
        completion: format!(" {}", gold.word()),
    })
}

/// Writes records as JSONL (UTF-8, LF, exactly the two keys per object, no
/// trailing blank line) and returns the line count.
pub fn write_finetune_file(
    records: &[FinetuneRecord],
    path: impl AsRef<Path>,
) -> Result<usize, FinetuneError> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(FinetuneError::EmptyInput);
    }
    let io_err = |source| FinetuneError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serialization cannot fail");
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
    }
    file.flush().map_err(io_err)?;
    Ok(records.len())
}

/// Validation summary for a written fine-tune file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationSummary {
    pub lines: usize,
    pub completions_negative: usize,
    pub completions_neutral: usize,
    pub completions_positive: usize,
}

/// Re-parses a JSONL fine-tune file, enforcing the bit-exact contract:
/// every line is an object with exactly the keys `prompt` and `completion`,
/// every completion is one of the three label words with a leading space,
/// every prompt ends with the separator, and no line is blank.
pub fn validate_finetune_file(
    path: impl AsRef<Path>,
    options: &FinetuneOptions,
) -> Result<(Vec<FinetuneRecord>, ValidationSummary), FinetuneError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| FinetuneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut summary = ValidationSummary {
        lines: 0,
        completions_negative: 0,
        completions_neutral: 0,
        completions_positive: 0,
    };
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let invalid = |reason: String| FinetuneError::InvalidRecord {
            line: line_no,
            reason,
        };
        if line.trim().is_empty() {
            return Err(invalid("blank line".into()));
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| invalid(format!("not valid JSON: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| invalid("not a JSON object".into()))?;
        if object.len() != 2 || !object.contains_key("prompt") || !object.contains_key("completion")
        {
            let keys: Vec<&str> = object.keys().map(String::as_str).collect();
            return Err(invalid(format!(
                "expected exactly the keys prompt and completion, found {keys:?}"
            )));
        }
        let record: FinetuneRecord = serde_json::from_value(value.clone())
            .map_err(|e| invalid(format!("bad field types: {e}")))?;
        if !record.prompt.ends_with(&options.separator) {
            return Err(invalid("prompt does not end with the separator".into()));
        }
        match record.completion.as_str() {
            " negative" => summary.completions_negative += 1,
            " neutral" => summary.completions_neutral += 1,
            " positive" => summary.completions_positive += 1,
            other => {
                return Err(invalid(format!(
                    "completion {other:?} is not one of \" negative\", \" neutral\", \" positive\""
                )));
            }
        }
        summary.lines += 1;
        records.push(record);
    }
    Ok((records, summary))
}

/// Parses a fine-tuned model's response with `mixed` removed from the
/// keyword set; a literal "mixed" answer therefore maps to `Unparseable`.
pub fn parse_finetuned_response(raw: &str) -> PredictedLabel {
    parse_with_keywords(raw, false)
}

/// Evaluates one tweet against a fine-tuned completion model: a single
/// call (voting is redundant at temperature 0 for a one-token completion)
/// with the record prompt format and the configured stop sequence.
pub fn predict_finetuned(
    gateway: &Gateway,
    tweet: &Tweet,
    options: &FinetuneOptions,
) -> Result<Prediction, GatewayError> {
    let prompt = format!("{}{}", tweet.text, options.separator);
    let raw = gateway.complete(&prompt, Some(&options.stop))?;
    let voted = parse_finetuned_response(&raw);
    Ok(Prediction {
        tweet_id: tweet.id.clone(),
        strategy: Strategy::Finetuned,
        raw_responses: vec![raw],
        voted,
        tie: false,
        reasoning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentimentLabel;
    use crate::corpus::SentimentLabel::*;
    use crate::gateway::BackendConfig;

    fn options() -> FinetuneOptions {
        FinetuneOptions::default()
    }

    #[test]
    fn record_format_is_exact() {
        let tweet = Tweet::labeled("1", "great day", Positive);
        let record = to_finetune_record(&tweet, &options()).unwrap();
        assert_eq!(record.prompt, "great day\n\n###\n\n");
        assert_eq!(record.completion, " positive");

        let tweet = Tweet::labeled("2", "meh", Neutral);
        let record = to_finetune_record(&tweet, &options()).unwrap();
        assert_eq!(record.completion, " neutral");
    }

    #[test]
    fn unlabeled_tweet_is_rejected() {
        let tweet = Tweet::unlabeled("1", "no label");
        assert!(matches!(
            to_finetune_record(&tweet, &options()),
            Err(FinetuneError::MissingGold(id)) if id == "1"
        ));
    }

    #[test]
    fn written_file_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let records: Vec<FinetuneRecord> = [
            Tweet::labeled("1", "line one", Negative),
            Tweet::labeled("2", "with \"quotes\" and\nnewline", Positive),
            Tweet::labeled("3", "unicode 😀 text", Neutral),
        ]
        .iter()
        .map(|t| to_finetune_record(t, &options()).unwrap())
        .collect();

        let written = write_finetune_file(&records, &path).unwrap();
        assert_eq!(written, 3);

        let content = fs::read_to_string(&path).unwrap();
        assert_eq!(content.lines().count(), 3, "newline inside text must stay escaped");
        assert!(!content.contains("\r"), "LF only");

        let (reparsed, summary) = validate_finetune_file(&path, &options()).unwrap();
        assert_eq!(reparsed, records);
        assert_eq!(summary.lines, 3);
        assert_eq!(
            (summary.completions_negative, summary.completions_neutral, summary.completions_positive),
            (1, 1, 1)
        );
    }

    #[test]
    fn empty_record_set_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_finetune_file(&[], dir.path().join("x.jsonl")),
            Err(FinetuneError::EmptyInput)
        ));
    }

    #[test]
    fn validation_rejects_extra_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(
            &path,
            "{\"prompt\":\"x\\n\\n###\\n\\n\",\"completion\":\" neutral\",\"extra\":1}\n",
        )
        .unwrap();
        let err = validate_finetune_file(&path, &options()).unwrap_err();
        assert!(matches!(err, FinetuneError::InvalidRecord { line: 1, .. }));
    }

    #[test]
    fn validation_rejects_bad_completions_and_missing_separator() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(
            &path,
            "{\"prompt\":\"x\\n\\n###\\n\\n\",\"completion\":\"positive\"}\n",
        )
        .unwrap();
        assert!(validate_finetune_file(&path, &options()).is_err());

        fs::write(&path, "{\"prompt\":\"x\",\"completion\":\" positive\"}\n").unwrap();
        assert!(validate_finetune_file(&path, &options()).is_err());
    }

    #[test]
    fn completion_parse_recovers_gold_for_every_record() {
        for gold in SentimentLabel::ALL {
            let tweet = Tweet::labeled("1", "text", gold);
            let record = to_finetune_record(&tweet, &options()).unwrap();
            assert_eq!(
                parse_finetuned_response(&record.completion),
                crate::gateway::PredictedLabel::from_sentiment(gold)
            );
        }
    }

    #[test]
    fn finetuned_parse_never_emits_mixed() {
        assert_eq!(parse_finetuned_response("mixed"), PredictedLabel::Unparseable);
        assert_eq!(
            parse_finetuned_response("The sentiment is mixed."),
            PredictedLabel::Unparseable
        );
        assert_eq!(parse_finetuned_response("1"), PredictedLabel::Neutral);
        assert_eq!(parse_finetuned_response(" positive"), PredictedLabel::Positive);
        assert_eq!(
            parse_finetuned_response(" neutral\n"),
            PredictedLabel::Neutral
        );
        // With mixed out of the keyword set, later usable keywords still count.
        assert_eq!(
            parse_finetuned_response("mixed, though mostly positive"),
            PredictedLabel::Positive
        );
    }

    #[test]
    fn mock_echo_backend_recovers_gold() {
        let config = BackendConfig::new("mock://demo?mode=echo", "ft-model");
        let gateway = Gateway::from_config(config).unwrap();
        let tweet = Tweet::labeled("7", "lovely weather", Positive);
        let mut gold = std::collections::HashMap::new();
        gold.insert(tweet.text.clone(), Positive);
        gateway.install_gold(&gold);

        let prediction = predict_finetuned(&gateway, &tweet, &options()).unwrap();
        assert_eq!(prediction.voted, PredictedLabel::Positive);
        assert_eq!(prediction.strategy, Strategy::Finetuned);
        assert_eq!(prediction.raw_responses.len(), 1);
    }
}
