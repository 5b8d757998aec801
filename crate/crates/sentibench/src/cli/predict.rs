//! Resumable, concurrent prediction runs and the predictions CSV format.
//!
//! The output file is append-only: every run first reads the ids already
//! present and skips them, so an interrupted run can be restarted and
//! performs backend work only for the tweets still missing. Workers pull
//! tweets from a shared queue; a single writer reorders completed rows by
//! dataset position so the file content is deterministic regardless of
//! which worker finishes first.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::corpus::{Dataset, Tweet};
use crate::gateway::{PredictedLabel, Prediction};

use super::CliError;

/// Frozen column layout of a predictions file.
pub const PREDICTIONS_HEADER: [&str; 7] = ["id", "strategy", "voted", "tie", "raw1", "raw2", "raw3"];

/// What a predict run did.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PredictOutcome {
    /// Rows appended by this run.
    pub written: usize,
    /// Tweets skipped because the file already had them.
    pub skipped: usize,
    /// Tweets attempted this run (limit applied).
    pub attempted: usize,
    /// Tweets whose prediction failed outright; they get no row and will
    /// be retried by the next run.
    pub failed: usize,
}

/// Reads the ids already present in a predictions file; a missing or
/// empty file yields the empty set.
pub fn existing_prediction_ids(path: &Path) -> Result<HashSet<String>, CliError> {
    let rows = match read_prediction_rows(path)? {
        Some(rows) => rows,
        None => return Ok(HashSet::new()),
    };
    Ok(rows.into_iter().map(|(id, _)| id).collect())
}

/// Parses a predictions file into `(id, voted)` pairs, enforcing the
/// frozen header and rejecting duplicate ids.
pub fn parse_predictions_file(path: &Path) -> Result<Vec<(String, PredictedLabel)>, CliError> {
    read_prediction_rows(path)?.ok_or_else(|| {
        CliError::Input(format!("predictions file {} does not exist", path.display()))
    })
}

/// Shared reader: `Ok(None)` when the file is absent or zero-length.
fn read_prediction_rows(path: &Path) -> Result<Option<Vec<(String, PredictedLabel)>>, CliError> {
    match std::fs::metadata(path) {
        Ok(meta) if meta.len() == 0 => return Ok(None),
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => {
            return Err(CliError::Input(format!(
                "cannot read predictions file {}: {e}",
                path.display()
            )))
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| {
            CliError::Input(format!("{} row {row_no}: {e}", path.display()))
        })?;
        if idx == 0 {
            let header: Vec<&str> = record.iter().collect();
            if header != PREDICTIONS_HEADER {
                return Err(CliError::Input(format!(
                    "{} has header {:?}, expected {:?}",
                    path.display(),
                    header.join(","),
                    PREDICTIONS_HEADER.join(",")
                )));
            }
            continue;
        }
        if record.len() != PREDICTIONS_HEADER.len() {
            return Err(CliError::Input(format!(
                "{} row {row_no}: expected {} fields, found {}",
                path.display(),
                PREDICTIONS_HEADER.len(),
                record.len()
            )));
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(CliError::Input(format!(
                "{} row {row_no}: duplicate prediction for id {id:?}",
                path.display()
            )));
        }
        let voted: PredictedLabel = record[2].parse().map_err(|e| {
            CliError::Input(format!("{} row {row_no}: {e}", path.display()))
        })?;
        rows.push((id, voted));
    }
    Ok(Some(rows))
}

/// One CSV row for a prediction: exactly three raw-response columns
/// (missing slots stay empty; extras beyond three are dropped).
fn prediction_record(prediction: &Prediction) -> [String; 7] {
    let mut raws = prediction.raw_responses.clone();
    raws.truncate(3);
    raws.resize(3, String::new());
    [
        prediction.tweet_id.clone(),
        prediction.strategy.as_str().to_string(),
        prediction.voted.as_str().to_string(),
        prediction.tie.to_string(),
        raws[0].clone(),
        raws[1].clone(),
        raws[2].clone(),
    ]
}

/// Runs `predict_one` over every tweet not yet present in `out_path`,
/// appending rows in dataset order. `max_workers` bounds the worker
/// threads (the gateway's own semaphore still bounds in-flight
/// requests); `limit` caps how many missing tweets this run attempts.
pub fn run_predictions<F>(
    dataset: &Dataset,
    out_path: &Path,
    limit: Option<usize>,
    max_workers: usize,
    predict_one: F,
) -> Result<PredictOutcome, CliError>
where
    F: Fn(&Tweet) -> Result<Prediction, CliError> + Sync,
{
    let existing = existing_prediction_ids(out_path)?;
    let remaining: Vec<&Tweet> = dataset
        .tweets
        .iter()
        .filter(|t| !existing.contains(&t.id))
        .take(limit.unwrap_or(usize::MAX))
        .collect();
    let mut outcome = PredictOutcome {
        skipped: existing.len(),
        attempted: remaining.len(),
        ..PredictOutcome::default()
    };
    if remaining.is_empty() {
        return Ok(outcome);
    }

    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Operational(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out_path)
        .map_err(|e| CliError::Operational(format!("cannot open {}: {e}", out_path.display())))?;
    let is_new = file
        .metadata()
        .map(|m| m.len() == 0)
        .map_err(|e| CliError::Operational(e.to_string()))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    let write_failed =
        |e: csv::Error| CliError::Operational(format!("cannot write {}: {e}", out_path.display()));
    if is_new {
        writer.write_record(PREDICTIONS_HEADER).map_err(write_failed)?;
    }

    let workers = max_workers.clamp(1, remaining.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<Prediction, CliError>)>();

    std::thread::scope(|scope| -> Result<(), CliError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let remaining = &remaining;
            let predict_one = &predict_one;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(tweet) = remaining.get(i) else { break };
                if tx.send((i, predict_one(tweet))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Single writer: buffer out-of-order completions and emit rows in
        // dataset order so reruns produce byte-identical files.
        let mut buffer: BTreeMap<usize, Result<Prediction, CliError>> = BTreeMap::new();
        let mut next_write = 0usize;
        let mut done = 0usize;
        for (i, result) in rx {
            buffer.insert(i, result);
            while let Some(result) = buffer.remove(&next_write) {
                match result {
                    Ok(prediction) => {
                        writer
                            .write_record(prediction_record(&prediction))
                            .map_err(write_failed)?;
                        outcome.written += 1;
                    }
                    Err(err) => {
                        outcome.failed += 1;
                        eprintln!("tweet {}: {err}", remaining[next_write].id);
                    }
                }
                next_write += 1;
                done += 1;
                if done.is_multiple_of(100) {
                    eprintln!("processed {done}/{}", remaining.len());
                }
            }
        }
        writer.flush().map_err(|e| {
            CliError::Operational(format!("cannot flush {}: {e}", out_path.display()))
        })?;
        Ok(())
    })?;

    Ok(outcome)
}
