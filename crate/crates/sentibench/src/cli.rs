//! Command-line front end.
//!
//! Eight subcommands tie the pipeline together: `ingest`, `predict`,
//! `evaluate`, `nuance`, `prep-finetune`, `embed`, `train`, and
//! `compare`. Configuration resolves as flags > config file >
//! `SENTIBENCH_*` environment > defaults; see [`config`].
//!
//! Exit codes are a stable contract: 0 success, 1 operational failure
//! (e.g. the per-tweet failure rate exceeded its threshold), 2
//! configuration or input error. Every command is idempotent with
//! respect to completed outputs, and the whole pipeline runs offline
//! against a `mock://` backend with no API key set.

pub mod config;
pub mod predict;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use thiserror::Error;

use crate::corpus::{
    class_distribution, load_split, CorpusError, Dataset, LoadOutcome, SentimentLabel, Split,
    Tweet,
};
use crate::embedding::{
    embed_dataset, embed_with_cache, export_projection, fit_pca, load_model, save_model,
    train_classifier, transform_pca, write_projection_csv, ClassifierKind, EmbedError,
    EmbeddingCache, ModelFile, PcaError, PersistError, PipelineModel, ProjectionMethod,
    TrainError, TrainOptions,
};
use crate::finetune::{
    predict_finetuned, to_finetune_record, validate_finetune_file, write_finetune_file,
    FinetuneError, FinetuneOptions,
};
use crate::gateway::{Gateway, GatewayError, PredictedLabel, Prediction, Strategy};
use crate::metrics::{compare_to_baselines, evaluate_pairs, MeasuredRow};
use crate::nuance::{
    breakdown_to_csv, default_abbreviations, default_slang, extract_reasoning,
    load_manual_annotations, nuance_breakdown, tag_dataset, Lexicon, LexiconSet, NuanceCategory,
    NuanceError,
};

pub use config::{GlobalArgs, RunConfig};

/// A command failure with its exit-code class.
#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration or input problem; exit code 2.
    #[error("{0}")]
    Input(String),
    /// Runtime failure; exit code 1.
    #[error("{0}")]
    Operational(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Operational(_) => 1,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FinetuneError> for CliError {
    fn from(e: FinetuneError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PcaError> for CliError {
    fn from(e: PcaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            // Misconfiguration and bad credentials are the operator's to
            // fix; transient backend trouble is operational.
            GatewayError::InvalidConfig(_)
            | GatewayError::InvalidInput(_)
            | GatewayError::AuthFailure(_)
            | GatewayError::EmptyVoteInput => CliError::Input(e.to_string()),
            _ => CliError::Operational(e.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Gateway(inner) => inner.into(),
            other => CliError::Operational(other.to_string()),
        }
    }
}

impl From<NuanceError> for CliError {
    fn from(e: NuanceError) -> Self {
        match e {
            NuanceError::Gateway(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sentibench",
    version,
    about = "Run and evaluate LLM-based sentiment classification strategies over tweet corpora"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Load a dataset file and print its size and class distribution.
    Ingest {
        /// Tab-separated dataset file (id, label, text).
        path: PathBuf,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
    },
    /// Run the configured strategy over a dataset, resumably.
    Predict {
        path: PathBuf,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
        /// Predict at most this many missing tweets, then stop.
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
        /// Trained pipeline file (embedding strategy only).
        #[arg(long, value_name = "PATH")]
        model_file: Option<PathBuf>,
        /// Tolerated per-tweet failure fraction before a nonzero exit.
        #[arg(long, value_name = "FRACTION")]
        failure_threshold: Option<f64>,
    },
    /// Score a predictions file against gold labels and write reports.
    Evaluate {
        path: PathBuf,
        #[arg(long, value_name = "PATH")]
        predictions: PathBuf,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
    },
    /// Tag nuance categories and break down performance per category.
    Nuance {
        path: PathBuf,
        #[arg(long, value_name = "PATH")]
        predictions: PathBuf,
        /// Also ask the backend to explain each tagged tweet.
        #[arg(long)]
        reason: bool,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
    },
    /// Write a fine-tuning JSONL file and validate it.
    PrepFinetune {
        path: PathBuf,
        #[arg(long, default_value = "train", value_parser = Split::from_str)]
        split: Split,
    },
    /// Embed a dataset through the cache; optionally export a projection.
    Embed {
        path: PathBuf,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
        /// Also write a 2-component PCA projection CSV.
        #[arg(long)]
        projection: bool,
    },
    /// Train the embedding-strategy pipeline and save it.
    Train {
        path: PathBuf,
        #[arg(long, default_value = "train", value_parser = Split::from_str)]
        split: Split,
        /// Principal components to keep (overrides config).
        #[arg(long, value_name = "K")]
        pca_k: Option<usize>,
        /// Classifier kind (overrides config).
        #[arg(long, value_name = "KIND", value_parser = ClassifierKind::from_str)]
        classifier: Option<ClassifierKind>,
    },
    /// Print the published-baseline comparison table.
    Compare {
        /// Predictions to include as a measured row.
        #[arg(long, value_name = "PATH", requires = "dataset")]
        predictions: Option<PathBuf>,
        /// Gold dataset for the measured row.
        #[arg(long, value_name = "PATH", requires = "predictions")]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = Split::from_str)]
        split: Split,
    },
}

/// Entry point for the binary: real arguments, real environment.
pub fn run() -> i32 {
    run_from(std::env::args_os(), &config::env_snapshot())
}

/// Runs the CLI against explicit arguments and an environment snapshot;
/// this is the in-process seam tests drive.
pub fn run_from<I, T>(args: I, env: &BTreeMap<String, String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; they are successes.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli, env) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env: &BTreeMap<String, String>) -> Result<(), CliError> {
    let run = config::resolve(&cli.global, env)?;
    let out = cli.global.out;
    match cli.command {
        Command::Ingest { path, split } => cmd_ingest(&path, split),
        Command::Predict {
            path,
            split,
            limit,
            model_file,
            failure_threshold,
        } => cmd_predict(&run, out, &path, split, limit, model_file, failure_threshold),
        Command::Evaluate {
            path,
            predictions,
            split,
        } => cmd_evaluate(&run, out, &path, split, &predictions),
        Command::Nuance {
            path,
            predictions,
            reason,
            split,
        } => cmd_nuance(&run, out, &path, split, &predictions, reason),
        Command::PrepFinetune { path, split } => cmd_prep_finetune(&run, out, &path, split),
        Command::Embed {
            path,
            split,
            projection,
        } => cmd_embed(&run, out, &path, split, projection),
        Command::Train {
            path,
            split,
            pca_k,
            classifier,
        } => cmd_train(&run, out, &path, split, pca_k, classifier),
        Command::Compare {
            predictions,
            dataset,
            split,
        } => cmd_compare(&run, out, predictions.as_deref(), dataset.as_deref(), split),
    }
}

// -------------------------------------------------------------------
// Shared helpers.
// -------------------------------------------------------------------

fn report_rejections(outcome: &LoadOutcome) {
    if !outcome.rejections.is_empty() {
        eprint!("{}", outcome.rejection_report());
    }
}

fn gold_map(dataset: &Dataset) -> Result<BTreeMap<String, SentimentLabel>, CliError> {
    let mut gold = BTreeMap::new();
    for tweet in &dataset.tweets {
        let label = tweet
            .gold
            .ok_or_else(|| CliError::Input(format!("tweet {:?} has no gold label", tweet.id)))?;
        gold.insert(tweet.id.clone(), label);
    }
    Ok(gold)
}

/// Joins predictions with gold labels, erroring on ids the dataset does
/// not contain.
fn pair_with_gold(
    predictions: &[(String, PredictedLabel)],
    gold: &BTreeMap<String, SentimentLabel>,
) -> Result<Vec<(SentimentLabel, PredictedLabel)>, CliError> {
    predictions
        .iter()
        .map(|(id, label)| {
            gold.get(id).map(|g| (*g, *label)).ok_or_else(|| {
                CliError::Input(format!(
                    "predictions file references id {id:?}, which is not in the dataset"
                ))
            })
        })
        .collect()
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Operational(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(())
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, content)
        .map_err(|e| CliError::Operational(format!("cannot write {}: {e}", path.display())))
}

fn build_gateway(run: &RunConfig, dataset: &Dataset) -> Result<Gateway, CliError> {
    let gateway = Gateway::from_config(run.backend.clone())?;
    // Echo modes of the mock backend answer with the gold label; a real
    // endpoint ignores this entirely.
    let gold: HashMap<String, SentimentLabel> = dataset
        .tweets
        .iter()
        .filter_map(|t| t.gold.map(|g| (t.text.clone(), g)))
        .collect();
    gateway.install_gold(&gold);
    Ok(gateway)
}

fn build_lexicons(run: &RunConfig) -> Result<LexiconSet, CliError> {
    let defaults = LexiconSet::default();
    let slang = match &run.slang_lexicon {
        Some(path) => Lexicon::from_file("slang", path)?,
        None => default_slang(),
    };
    let abbreviations = match &run.abbreviation_lexicon {
        Some(path) => Lexicon::from_file("abbreviations", path)?,
        None => default_abbreviations(),
    };
    let contrast = match &run.contrast_lexicon {
        Some(path) => Lexicon::from_file("contrast", path)?,
        None => defaults.contrast,
    };
    Ok(LexiconSet {
        slang,
        abbreviations,
        contrast,
    })
}

// -------------------------------------------------------------------
// Commands.
// -------------------------------------------------------------------

fn cmd_ingest(path: &Path, split: Split) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let dist = class_distribution(&outcome.dataset)?;
    println!(
        "loaded {split} split from {}: {} tweets",
        path.display(),
        outcome.dataset.len()
    );
    println!(
        "Positive {} / Neutral {} / Negative {}",
        dist[&SentimentLabel::Positive],
        dist[&SentimentLabel::Neutral],
        dist[&SentimentLabel::Negative]
    );
    Ok(())
}

fn cmd_predict(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
    limit: Option<usize>,
    model_file: Option<PathBuf>,
    failure_threshold: Option<f64>,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let dataset = outcome.dataset;
    let gateway = build_gateway(run, &dataset)?;
    let out_path = out.unwrap_or_else(|| {
        run.output_dir
            .join(format!("predictions-{}.csv", run.strategy))
    });
    let threshold = failure_threshold.unwrap_or(run.failure_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Input(format!(
            "failure threshold must be within [0, 1], got {threshold}"
        )));
    }
    let workers = run.backend.max_concurrency;

    let result = match run.strategy {
        Strategy::Prompt => {
            predict::run_predictions(&dataset, &out_path, limit, workers, |tweet| {
                Ok(gateway.predict_prompt_strategy(tweet)?)
            })?
        }
        Strategy::Finetuned => {
            let options = FinetuneOptions::default();
            predict::run_predictions(&dataset, &out_path, limit, workers, |tweet| {
                Ok(predict_finetuned(&gateway, tweet, &options)?)
            })?
        }
        Strategy::Embedding => {
            let model_path = model_file.ok_or_else(|| {
                CliError::Input(
                    "the embedding strategy needs --model-file pointing at a trained pipeline"
                        .into(),
                )
            })?;
            let pipeline = match load_model(&model_path)? {
                ModelFile::Pipeline(p) => p,
                other => {
                    return Err(CliError::Input(format!(
                        "{} holds a {} model, expected a pipeline",
                        model_path.display(),
                        other.kind_name()
                    )))
                }
            };
            if pipeline.embedding_model_id != run.backend.model_id {
                return Err(CliError::Input(format!(
                    "pipeline was trained on embeddings from {:?} but the backend model is {:?}",
                    pipeline.embedding_model_id, run.backend.model_id
                )));
            }
            let cache = EmbeddingCache::new(&run.cache_dir)?;
            predict::run_predictions(&dataset, &out_path, limit, workers, |tweet| {
                predict_with_pipeline(&gateway, &pipeline, &cache, tweet)
            })?
        }
    };

    if result.attempted == 0 {
        println!(
            "nothing to do: all {} predictions already in {}",
            result.skipped,
            out_path.display()
        );
        return Ok(());
    }
    println!(
        "wrote {} predictions to {} ({} skipped as already present, {} failed)",
        result.written,
        out_path.display(),
        result.skipped,
        result.failed
    );
    let rate = result.failed as f64 / result.attempted as f64;
    if rate > threshold {
        return Err(CliError::Operational(format!(
            "failure rate {:.1}% exceeds the {:.1}% threshold; partial output kept at {}",
            rate * 100.0,
            threshold * 100.0,
            out_path.display()
        )));
    }
    Ok(())
}

/// Embedding-strategy prediction for one tweet: preprocess, embed via
/// the cache, project, classify.
fn predict_with_pipeline(
    gateway: &Gateway,
    pipeline: &PipelineModel,
    cache: &EmbeddingCache,
    tweet: &Tweet,
) -> Result<Prediction, CliError> {
    let text = crate::embedding::preprocess(&tweet.text, &pipeline.preprocess);
    let (matrix, _stats) = embed_with_cache(gateway, &[text], cache, 1)?;
    let features = match &pipeline.pca {
        Some(pca) => transform_pca(pca, &matrix)?,
        None => matrix,
    };
    let label = pipeline.classifier.predict(&features)?[0];
    Ok(Prediction {
        tweet_id: tweet.id.clone(),
        strategy: Strategy::Embedding,
        raw_responses: Vec::new(),
        voted: PredictedLabel::from_sentiment(label),
        tie: false,
        reasoning: None,
    })
}

fn cmd_evaluate(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
    predictions_path: &Path,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let gold = gold_map(&outcome.dataset)?;
    let predictions = predict::parse_predictions_file(predictions_path)?;
    let pairs = pair_with_gold(&predictions, &gold)?;
    let report = evaluate_pairs(&pairs);

    let out_dir = out.unwrap_or_else(|| run.output_dir.clone());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Operational(format!("cannot create {}: {e}", out_dir.display())))?;
    write_output(&out_dir.join("metrics.csv"), &report.to_csv())?;
    write_output(&out_dir.join("report.txt"), &report.to_text())?;
    let comparison =
        compare_to_baselines(&[MeasuredRow::from_report(&run.backend.model_id, &report)]);
    write_output(&out_dir.join("comparison.md"), &comparison.to_markdown())?;

    print!("{}", report.to_text());
    println!(
        "scored {} of {} tweets; wrote metrics.csv, report.txt, comparison.md to {}",
        pairs.len(),
        gold.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_nuance(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
    predictions_path: &Path,
    reason: bool,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let dataset = outcome.dataset;
    let lexicons = build_lexicons(run)?;
    let manual = match &run.manual_annotations {
        Some(path) => load_manual_annotations(path, Some(&dataset))?,
        None => BTreeMap::new(),
    };
    let tags = tag_dataset(&dataset, &lexicons, &manual);
    let gold = gold_map(&dataset)?;
    let predictions: BTreeMap<String, PredictedLabel> =
        predict::parse_predictions_file(predictions_path)?
            .into_iter()
            .collect();
    let breakdown = nuance_breakdown(&predictions, &gold, &tags);

    let out_dir = out.unwrap_or_else(|| run.output_dir.clone());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Operational(format!("cannot create {}: {e}", out_dir.display())))?;
    let breakdown_path = out_dir.join("nuance.csv");
    write_output(&breakdown_path, &breakdown_to_csv(&breakdown))?;

    println!(
        "{:<20} {:>7} {:>7} {:>10} {:>10}",
        "category", "tagged", "scored", "accuracy", "macro_f1"
    );
    for category in NuanceCategory::ALL {
        let tagged = tags.values().filter(|set| set.contains(category)).count();
        let cell = &breakdown[&category];
        println!(
            "{:<20} {:>7} {:>7} {:>10.4} {:>10.4}",
            category.canonical_name(),
            tagged,
            cell.tweet_count,
            cell.report.accuracy,
            cell.report.macro_f1
        );
    }
    println!("wrote per-category breakdown to {}", breakdown_path.display());

    if reason {
        let gateway = build_gateway(run, &dataset)?;
        let by_id: BTreeMap<&str, &Tweet> =
            dataset.tweets.iter().map(|t| (t.id.as_str(), t)).collect();
        let reasoning_path = out_dir.join("reasoning.csv");
        ensure_parent(&reasoning_path)?;
        let mut writer = csv::Writer::from_path(&reasoning_path).map_err(|e| {
            CliError::Operational(format!("cannot write {}: {e}", reasoning_path.display()))
        })?;
        let write_failed = |e: csv::Error| {
            CliError::Operational(format!("cannot write {}: {e}", reasoning_path.display()))
        };
        writer.write_record(["id", "reasoning"]).map_err(write_failed)?;
        let mut written = 0usize;
        for id in tags.keys() {
            let Some(tweet) = by_id.get(id.as_str()) else {
                continue;
            };
            let text = extract_reasoning(&gateway, tweet)?;
            writer.write_record([id.as_str(), &text]).map_err(write_failed)?;
            written += 1;
        }
        writer.flush().map_err(|e| {
            CliError::Operational(format!("cannot flush {}: {e}", reasoning_path.display()))
        })?;
        println!(
            "wrote reasoning for {written} tagged tweets to {}",
            reasoning_path.display()
        );
    }
    Ok(())
}

fn cmd_prep_finetune(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let options = FinetuneOptions::default();
    let mut records = Vec::with_capacity(outcome.dataset.len());
    for tweet in &outcome.dataset.tweets {
        records.push(to_finetune_record(tweet, &options)?);
    }
    let out_path =
        out.unwrap_or_else(|| run.output_dir.join(format!("finetune-{split}.jsonl")));
    ensure_parent(&out_path)?;
    write_finetune_file(&records, &out_path)?;
    // Self-check: never trust the writer; re-parse what actually landed
    // on disk before reporting success.
    let (_, summary) = validate_finetune_file(&out_path, &options)?;
    println!(
        "wrote {} validated fine-tune lines to {}",
        summary.lines,
        out_path.display()
    );
    println!(
        "completions: negative {} / neutral {} / positive {}",
        summary.completions_negative, summary.completions_neutral, summary.completions_positive
    );
    Ok(())
}

fn cmd_embed(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
    projection: bool,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let dataset = outcome.dataset;
    let gateway = build_gateway(run, &dataset)?;
    let cache = EmbeddingCache::new(&run.cache_dir)?;
    let (embeddings, stats) = embed_dataset(
        &gateway,
        &dataset,
        &run.preprocess,
        &cache,
        run.embed_batch_size,
    )?;
    println!(
        "embedded {} tweets at dimension {} (model {})",
        embeddings.rows(),
        embeddings.dim(),
        embeddings.model_id
    );
    println!(
        "cache: {} hits, {} misses, {} backend requests",
        stats.hits, stats.misses, stats.requests
    );
    if projection {
        let gold: Vec<Option<SentimentLabel>> = dataset.tweets.iter().map(|t| t.gold).collect();
        let rows = export_projection(&embeddings, &gold, ProjectionMethod::Pca2D)?;
        let out_path = out.unwrap_or_else(|| run.output_dir.join("projection.csv"));
        ensure_parent(&out_path)?;
        write_projection_csv(&rows, &out_path)?;
        println!("wrote 2-D projection to {}", out_path.display());
    }
    Ok(())
}

fn cmd_train(
    run: &RunConfig,
    out: Option<PathBuf>,
    path: &Path,
    split: Split,
    pca_k: Option<usize>,
    classifier: Option<ClassifierKind>,
) -> Result<(), CliError> {
    let outcome = load_split(path, split)?;
    report_rejections(&outcome);
    let dataset = outcome.dataset;
    let mut labels = Vec::with_capacity(dataset.len());
    for tweet in &dataset.tweets {
        labels.push(tweet.gold.ok_or_else(|| {
            CliError::Input(format!("tweet {:?} has no gold label", tweet.id))
        })?);
    }

    let gateway = build_gateway(run, &dataset)?;
    let cache = EmbeddingCache::new(&run.cache_dir)?;
    let (embeddings, _stats) = embed_dataset(
        &gateway,
        &dataset,
        &run.preprocess,
        &cache,
        run.embed_batch_size,
    )?;

    let k = pca_k.unwrap_or(run.pca_k);
    if k == 0 {
        return Err(CliError::Input("pca_k must be >= 1".into()));
    }
    let pca = fit_pca(&embeddings.matrix, k)?;
    let features = transform_pca(&pca, &embeddings.matrix)?;

    let kind = classifier.unwrap_or(run.classifier);
    let options = TrainOptions::new(kind, run.seed);
    let model = train_classifier(&features, &labels, &options)?;
    let predicted = model.predict(&features)?;
    let correct = predicted
        .iter()
        .zip(&labels)
        .filter(|(p, g)| p == g)
        .count();
    let accuracy = correct as f64 / labels.len().max(1) as f64;

    let pipeline = PipelineModel {
        embedding_model_id: run.backend.model_id.clone(),
        preprocess: run.preprocess,
        pca: Some(pca),
        classifier: model,
    };
    let retained = pipeline
        .pca
        .as_ref()
        .map(|p| p.retained_fraction())
        .unwrap_or(1.0);
    let out_path = out.unwrap_or_else(|| run.output_dir.join("pipeline.sgtm"));
    ensure_parent(&out_path)?;
    save_model(&ModelFile::Pipeline(pipeline), &out_path)?;

    println!("explained variance retained: {retained:.4}");
    println!("training accuracy: {accuracy:.4}");
    println!("saved {kind} pipeline to {}", out_path.display());
    Ok(())
}

fn cmd_compare(
    run: &RunConfig,
    out: Option<PathBuf>,
    predictions_path: Option<&Path>,
    dataset_path: Option<&Path>,
    split: Split,
) -> Result<(), CliError> {
    let mut measured = Vec::new();
    if let (Some(pred), Some(ds_path)) = (predictions_path, dataset_path) {
        let outcome = load_split(ds_path, split)?;
        report_rejections(&outcome);
        let gold = gold_map(&outcome.dataset)?;
        let predictions = predict::parse_predictions_file(pred)?;
        let pairs = pair_with_gold(&predictions, &gold)?;
        let report = evaluate_pairs(&pairs);
        measured.push(MeasuredRow::from_report(&run.backend.model_id, &report));
    }
    let table = compare_to_baselines(&measured).to_markdown();
    match out {
        Some(path) => {
            write_output(&path, &table)?;
            println!("wrote comparison table to {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn no_env() -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    /// Runs the CLI in-process with a fixed argv prefix.
    fn cli(args: &[&str]) -> i32 {
        let mut argv = vec!["sentibench"];
        argv.extend_from_slice(args);
        run_from(argv, &no_env())
    }

    fn path_str(path: &Path) -> String {
        path.to_str().expect("utf-8 temp path").to_string()
    }

    /// Writes a small labeled dataset and returns its path. Labels cycle
    /// negative, neutral, positive.
    fn write_dataset(dir: &Path, n: usize) -> PathBuf {
        let mut content = String::new();
        for i in 0..n {
            let label = ["negative", "neutral", "positive"][i % 3];
            content.push_str(&format!("{i}\t{label}\ttweet number {i} talking about things\n"));
        }
        let path = dir.join("tweets.tsv");
        std::fs::write(&path, content).unwrap();
        path
    }

    const MOCK_ECHO: &str = "mock://cli-test?seed=11&mode=gold-echo&epsilon=0.0";

    #[test]
    fn ingest_prints_distribution_and_exits_zero() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 9);
        assert_eq!(cli(&["ingest", &path_str(&data)]), 0);
        assert_eq!(cli(&["ingest", "/nonexistent/data.tsv"]), 2);

        // An empty file is a valid, empty dataset.
        let empty = dir.path().join("empty.tsv");
        std::fs::write(&empty, "").unwrap();
        assert_eq!(cli(&["ingest", &path_str(&empty)]), 0);
    }

    #[test]
    fn predict_then_evaluate_offline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 12);
        let pred = dir.path().join("pred.csv");
        let reports = dir.path().join("reports");

        let code = cli(&[
            "predict",
            &path_str(&data),
            "--backend-url",
            MOCK_ECHO,
            "--out",
            &path_str(&pred),
        ]);
        assert_eq!(code, 0);
        let rows = predict::parse_predictions_file(&pred).unwrap();
        assert_eq!(rows.len(), 12);
        // epsilon 0 echoes gold exactly.
        assert!(rows
            .iter()
            .all(|(id, label)| {
                let i: usize = id.parse().unwrap();
                label.as_str() == ["negative", "neutral", "positive"][i % 3]
            }));

        let code = cli(&[
            "evaluate",
            &path_str(&data),
            "--predictions",
            &path_str(&pred),
            "--out",
            &path_str(&reports),
        ]);
        assert_eq!(code, 0);
        let metrics = std::fs::read_to_string(reports.join("metrics.csv")).unwrap();
        assert!(metrics.contains("accuracy,1.000000"), "{metrics}");
        let comparison = std::fs::read_to_string(reports.join("comparison.md")).unwrap();
        assert!(comparison.contains("| GPT 3.5 Turbo | 0.9732 | 0.9198 | 0.9426 |"));
        assert!(comparison.contains("(this run)"));
        assert!(reports.join("report.txt").exists());
    }

    #[test]
    fn predict_resumes_and_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 10);
        let resumed = dir.path().join("resumed.csv");
        let oneshot = dir.path().join("oneshot.csv");

        let base = ["predict".to_string(), path_str(&data)];
        let run = |out: &Path, extra: &[&str]| {
            let mut args: Vec<String> = base.to_vec();
            args.extend(["--backend-url".into(), MOCK_ECHO.into()]);
            args.extend(["--out".into(), path_str(out)]);
            args.extend(extra.iter().map(|s| s.to_string()));
            run_from(
                std::iter::once("sentibench".to_string()).chain(args),
                &no_env(),
            )
        };

        assert_eq!(run(&resumed, &["--limit", "4"]), 0);
        assert_eq!(
            predict::existing_prediction_ids(&resumed).unwrap().len(),
            4
        );
        assert_eq!(run(&resumed, &[]), 0);
        assert_eq!(run(&oneshot, &[]), 0);
        assert_eq!(
            std::fs::read(&resumed).unwrap(),
            std::fs::read(&oneshot).unwrap(),
            "interrupted-and-resumed output must match a one-shot run"
        );

        // Idempotent rerun: nothing changes.
        let before = std::fs::read(&resumed).unwrap();
        assert_eq!(run(&resumed, &[]), 0);
        assert_eq!(std::fs::read(&resumed).unwrap(), before);
    }

    #[test]
    fn evaluate_rejects_unknown_prediction_ids() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 3);
        let pred = dir.path().join("pred.csv");
        std::fs::write(
            &pred,
            "id,strategy,voted,tie,raw1,raw2,raw3\n999,prompt,positive,false,,,\n",
        )
        .unwrap();
        let code = cli(&[
            "evaluate",
            &path_str(&data),
            "--predictions",
            &path_str(&pred),
            "--out",
            &path_str(&dir.path().join("reports")),
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn finetuned_strategy_writes_single_response_rows() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 6);
        let pred = dir.path().join("pred.csv");
        let code = cli(&[
            "predict",
            &path_str(&data),
            "--strategy",
            "finetuned",
            "--backend-url",
            MOCK_ECHO,
            "--out",
            &path_str(&pred),
        ]);
        assert_eq!(code, 0);
        let content = std::fs::read_to_string(&pred).unwrap();
        let second = content.lines().nth(1).unwrap();
        assert!(second.starts_with("0,finetuned,negative,false,"), "{second}");
    }

    #[test]
    fn prep_finetune_writes_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 9);
        let out = dir.path().join("ft.jsonl");
        let code = cli(&[
            "prep-finetune",
            &path_str(&data),
            "--split",
            "train",
            "--out",
            &path_str(&out),
        ]);
        assert_eq!(code, 0);
        let content = std::fs::read_to_string(&out).unwrap();
        assert_eq!(content.lines().count(), 9);
        assert!(content.contains("\\n\\n###\\n\\n"));

        // Empty dataset: input error.
        let empty = dir.path().join("empty.tsv");
        std::fs::write(&empty, "").unwrap();
        assert_eq!(
            cli(&["prep-finetune", &path_str(&empty), "--out", &path_str(&out)]),
            2
        );
    }

    #[test]
    fn train_then_embedding_predict_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 30);
        let cache = dir.path().join("cache");
        let model = dir.path().join("pipeline.sgtm");
        let mock = "mock://cli-train?seed=5&dim=16";

        let code = cli(&[
            "train",
            &path_str(&data),
            "--backend-url",
            mock,
            "--model",
            "mock-embed",
            "--cache-dir",
            &path_str(&cache),
            "--pca-k",
            "4",
            "--out",
            &path_str(&model),
        ]);
        assert_eq!(code, 0);
        assert!(matches!(
            load_model(&model).unwrap(),
            ModelFile::Pipeline(_)
        ));

        // Same seed, same data: retraining is byte-identical.
        let model2 = dir.path().join("pipeline2.sgtm");
        let code = cli(&[
            "train",
            &path_str(&data),
            "--backend-url",
            mock,
            "--model",
            "mock-embed",
            "--cache-dir",
            &path_str(&cache),
            "--pca-k",
            "4",
            "--out",
            &path_str(&model2),
        ]);
        assert_eq!(code, 0);
        assert_eq!(
            std::fs::read(&model).unwrap(),
            std::fs::read(&model2).unwrap()
        );

        // pca_k beyond the embedding dimension is a config error.
        assert_eq!(
            cli(&[
                "train",
                &path_str(&data),
                "--backend-url",
                mock,
                "--model",
                "mock-embed",
                "--cache-dir",
                &path_str(&cache),
                "--pca-k",
                "999",
                "--out",
                &path_str(&dir.path().join("nope.sgtm")),
            ]),
            2
        );

        let pred = dir.path().join("pred.csv");
        let code = cli(&[
            "predict",
            &path_str(&data),
            "--strategy",
            "embedding",
            "--backend-url",
            mock,
            "--model",
            "mock-embed",
            "--cache-dir",
            &path_str(&cache),
            "--model-file",
            &path_str(&model),
            "--out",
            &path_str(&pred),
        ]);
        assert_eq!(code, 0);
        let rows = predict::parse_predictions_file(&pred).unwrap();
        assert_eq!(rows.len(), 30);

        // Missing --model-file is an input error.
        assert_eq!(
            cli(&[
                "predict",
                &path_str(&data),
                "--strategy",
                "embedding",
                "--backend-url",
                mock,
                "--out",
                &path_str(&dir.path().join("x.csv")),
            ]),
            2
        );
    }

    #[test]
    fn embed_writes_projection_when_asked() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 8);
        let projection = dir.path().join("projection.csv");
        let code = cli(&[
            "embed",
            &path_str(&data),
            "--backend-url",
            "mock://cli-embed?seed=2&dim=12",
            "--cache-dir",
            &path_str(&dir.path().join("cache")),
            "--projection",
            "--out",
            &path_str(&projection),
        ]);
        assert_eq!(code, 0);
        let content = std::fs::read_to_string(&projection).unwrap();
        assert!(content.starts_with("id,x,y,label\n"));
        assert_eq!(content.lines().count(), 9);
    }

    #[test]
    fn nuance_writes_breakdown_and_reasoning() {
        let dir = tempfile::tempdir().unwrap();
        let content = "1\tpositive\tgreat phone \u{1F600} #happy\n\
                       2\tnegative\tTBH the battery is bad\n\
                       3\tneutral\tnice screen, but weak speaker\n";
        let data = dir.path().join("tweets.tsv");
        std::fs::write(&data, content).unwrap();
        let pred = dir.path().join("pred.csv");
        std::fs::write(
            &pred,
            "id,strategy,voted,tie,raw1,raw2,raw3\n\
             1,prompt,positive,false,2,2,2\n\
             2,prompt,neutral,false,1,1,1\n\
             3,prompt,neutral,false,1,1,1\n",
        )
        .unwrap();
        let out = dir.path().join("nuance-out");
        let code = cli(&[
            "nuance",
            &path_str(&data),
            "--predictions",
            &path_str(&pred),
            "--backend-url",
            MOCK_ECHO,
            "--reason",
            "--out",
            &path_str(&out),
        ]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(out.join("nuance.csv")).unwrap();
        assert!(csv.starts_with("category,metric,value\n"));
        assert!(csv.contains("Emoji,tweet_count,1"), "{csv}");
        assert!(csv.contains("ModernAbbreviation,accuracy,0.000000"), "{csv}");
        let reasoning = std::fs::read_to_string(out.join("reasoning.csv")).unwrap();
        assert_eq!(reasoning.lines().count(), 4, "{reasoning}");
    }

    #[test]
    fn compare_emits_the_published_table() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("comparison.md");
        assert_eq!(cli(&["compare", "--out", &path_str(&out)]), 0);
        let table = std::fs::read_to_string(&out).unwrap();
        assert!(table.contains("| Nguyen et al. (RoBERTa) | 0.720 | 0.732 | 0.725 |"));
        assert!(!table.contains("(this run)"));
    }

    #[test]
    fn predict_fails_operationally_when_too_many_tweets_fail() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 4);
        // An HTTP backend pointed at a closed port: every tweet fails.
        // Retries are disabled so the failures surface immediately.
        let conf = dir.path().join("run.conf");
        std::fs::write(
            &conf,
            "[backend]\nurl = http://127.0.0.1:1\nmax_retries = 0\n",
        )
        .unwrap();
        let code = cli(&[
            "predict",
            &path_str(&data),
            "--config",
            &path_str(&conf),
            "--out",
            &path_str(&dir.path().join("pred.csv")),
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn argument_errors_exit_two_and_help_exits_zero() {
        assert_eq!(cli(&["no-such-command"]), 2);
        assert_eq!(cli(&["predict"]), 2, "missing dataset path");
        assert_eq!(cli(&["--help"]), 0);
        assert_eq!(cli(&["compare", "--predictions", "x.csv"]), 2, "needs --dataset");
    }

    #[test]
    fn config_file_drives_a_run() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_dataset(dir.path(), 6);
        let pred = dir.path().join("pred.csv");
        let conf = dir.path().join("run.conf");
        std::fs::write(
            &conf,
            format!(
                "[backend]\nurl = {MOCK_ECHO}\nvote_count = 1\n\n[run]\nstrategy = prompt\n"
            ),
        )
        .unwrap();
        let code = cli(&[
            "predict",
            &path_str(&data),
            "--config",
            &path_str(&conf),
            "--out",
            &path_str(&pred),
        ]);
        assert_eq!(code, 0);
        let content = std::fs::read_to_string(&pred).unwrap();
        // vote_count 1: one raw response, two empty columns.
        let row = content.lines().nth(1).unwrap();
        assert!(row.ends_with(",,"), "{row}");

        // Bad config file: exit 2.
        std::fs::write(&conf, "[backend]\nbogus_key = 1\n").unwrap();
        assert_eq!(
            cli(&["predict", &path_str(&data), "--config", &path_str(&conf)]),
            2
        );
    }
}
