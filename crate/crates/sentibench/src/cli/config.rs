//! Run configuration: a flat, sectioned key-value file format plus the
//! precedence rules that merge it with flags and environment variables.
//!
//! Precedence, highest first: command-line flags, config file,
//! `SENTIBENCH_*` environment variables, built-in defaults. The API key
//! is deliberately absent from this module — it is read from an
//! environment variable by the HTTP transport and never appears in a
//! flag or a file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::embedding::{ClassifierKind, PreprocessOptions, DEFAULT_EMBED_BATCH};
use crate::gateway::{BackendConfig, Strategy};

/// Default fraction of per-tweet failures a predict run tolerates.
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.1;

/// Default number of principal components kept by `train`.
pub const DEFAULT_PCA_K: usize = 150;

/// Every setting a command can draw on, fully resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub strategy: Strategy,
    pub seed: u64,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Predict exits nonzero when failed tweets exceed this fraction.
    pub failure_threshold: f64,
    pub pca_k: usize,
    pub classifier: ClassifierKind,
    pub preprocess: PreprocessOptions,
    pub embed_batch_size: usize,
    pub slang_lexicon: Option<PathBuf>,
    pub abbreviation_lexicon: Option<PathBuf>,
    pub contrast_lexicon: Option<PathBuf>,
    pub manual_annotations: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendConfig::default(),
            strategy: Strategy::Prompt,
            seed: 42,
            cache_dir: PathBuf::from(".sentibench/cache"),
            output_dir: PathBuf::from(".sentibench/out"),
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            pca_k: DEFAULT_PCA_K,
            classifier: ClassifierKind::RandomForest,
            preprocess: PreprocessOptions::default(),
            embed_batch_size: DEFAULT_EMBED_BATCH,
            slang_lexicon: None,
            abbreviation_lexicon: None,
            contrast_lexicon: None,
            manual_annotations: None,
        }
    }
}

/// Configuration failures; all map to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Keys the file format accepts, as `section.key`.
const KNOWN_KEYS: [&str; 22] = [
    "backend.url",
    "backend.model",
    "backend.api_key_env",
    "backend.temperature",
    "backend.vote_count",
    "backend.max_retries",
    "backend.timeout_secs",
    "backend.max_concurrency",
    "run.strategy",
    "run.seed",
    "run.cache_dir",
    "run.output_dir",
    "run.failure_threshold",
    "embedding.pca_k",
    "embedding.classifier",
    "embedding.lowercase",
    "embedding.remove_stopwords",
    "embedding.batch_size",
    "nuance.slang_lexicon",
    "nuance.abbreviation_lexicon",
    "nuance.manual_annotations",
    "nuance.contrast_lexicon",
];

/// A parsed config file: `section.key` to raw value.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        FileConfig::parse(&content)
    }

    /// Parses the sectioned key-value format: `[section]` headers,
    /// `key = value` lines, `#`/`;` comments, blank lines ignored.
    pub fn parse(content: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let Some(name) = header.strip_suffix(']') else {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        reason: "unterminated section header".into(),
                    });
                };
                section = name.trim().to_lowercase();
                if section.is_empty() {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        reason: "empty section name".into(),
                    });
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: line_no,
                    reason: format!("expected `key = value`, found {line:?}"),
                });
            };
            let key = key.trim().to_lowercase();
            if key.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    reason: "empty key".into(),
                });
            }
            if section.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    reason: format!("key {key:?} appears before any [section] header"),
                });
            }
            let full = format!("{section}.{key}");
            if !KNOWN_KEYS.contains(&full.as_str()) {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: full,
                });
            }
            entries.insert(full, value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// The shared command-line flags, all optional so absence falls through
/// to the next precedence level.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct GlobalArgs {
    /// Path to a config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Backend base URL; `mock://…` selects the offline mock backend.
    #[arg(long, global = true, value_name = "URL")]
    pub backend_url: Option<String>,
    /// Model identifier sent with every request.
    #[arg(long, global = true, value_name = "ID")]
    pub model: Option<String>,
    /// Classification strategy: prompt, finetuned, or embedding.
    #[arg(long, global = true, value_name = "NAME", value_parser = Strategy::from_str)]
    pub strategy: Option<Strategy>,
    /// Seed for every seeded computation (training, holdouts).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Directory for the embedding cache.
    #[arg(long, global = true, value_name = "PATH")]
    pub cache_dir: Option<PathBuf>,
    /// Output path; meaning depends on the subcommand (file or directory).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Snapshot of the `SENTIBENCH_*` environment variables that configure
/// runs. The API key variable is intentionally not included.
pub fn env_snapshot() -> BTreeMap<String, String> {
    std::env::vars()
        .filter(|(k, _)| k.starts_with("SENTIBENCH_") && k != crate::gateway::DEFAULT_API_KEY_ENV)
        .collect()
}

fn parse_typed<T>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

/// Resolves one setting: flag, then file, then environment, then default.
fn setting<T, F>(
    flag: Option<T>,
    file: &FileConfig,
    file_key: &str,
    env: &BTreeMap<String, String>,
    env_key: &str,
    default: T,
    parse: F,
) -> Result<T, ConfigError>
where
    F: Fn(&str, &str) -> Result<T, ConfigError>,
{
    if let Some(value) = flag {
        return Ok(value);
    }
    if let Some(raw) = file.get(file_key) {
        return parse(file_key, raw);
    }
    if let Some(raw) = env.get(env_key) {
        return parse(env_key, raw);
    }
    Ok(default)
}

/// Builds the effective [`RunConfig`] from flags, the config file named
/// by `--config` (if any), and the environment snapshot.
pub fn resolve(args: &GlobalArgs, env: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = RunConfig::default();

    let mut backend = BackendConfig::default();
    backend.base_url = setting(
        args.backend_url.clone(),
        &file,
        "backend.url",
        env,
        "SENTIBENCH_BACKEND_URL",
        backend.base_url,
        |_, v| Ok(v.to_string()),
    )?;
    backend.model_id = setting(
        args.model.clone(),
        &file,
        "backend.model",
        env,
        "SENTIBENCH_MODEL",
        backend.model_id,
        |_, v| Ok(v.to_string()),
    )?;
    if let Some(raw) = file.get("backend.api_key_env") {
        backend.api_key_env = raw.to_string();
    }
    if let Some(raw) = file.get("backend.temperature") {
        backend.temperature = parse_typed("backend.temperature", raw)?;
    }
    if let Some(raw) = file.get("backend.vote_count") {
        backend.vote_count = parse_typed("backend.vote_count", raw)?;
    }
    if let Some(raw) = file.get("backend.max_retries") {
        backend.max_retries = parse_typed("backend.max_retries", raw)?;
    }
    if let Some(raw) = file.get("backend.timeout_secs") {
        backend.request_timeout = Duration::from_secs(parse_typed("backend.timeout_secs", raw)?);
    }
    if let Some(raw) = file.get("backend.max_concurrency") {
        backend.max_concurrency = parse_typed("backend.max_concurrency", raw)?;
    }
    backend
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let strategy = setting(
        args.strategy,
        &file,
        "run.strategy",
        env,
        "SENTIBENCH_STRATEGY",
        defaults.strategy,
        parse_typed::<Strategy>,
    )?;
    let seed = setting(
        args.seed,
        &file,
        "run.seed",
        env,
        "SENTIBENCH_SEED",
        defaults.seed,
        parse_typed::<u64>,
    )?;
    let cache_dir = setting(
        args.cache_dir.clone(),
        &file,
        "run.cache_dir",
        env,
        "SENTIBENCH_CACHE_DIR",
        defaults.cache_dir.clone(),
        |_, v| Ok(PathBuf::from(v)),
    )?;
    // `--out` names a per-command output path, not the run directory, so
    // the directory falls through to file/env/default directly.
    let output_dir = setting(
        None,
        &file,
        "run.output_dir",
        env,
        "SENTIBENCH_OUTPUT_DIR",
        defaults.output_dir.clone(),
        |_, v| Ok(PathBuf::from(v)),
    )?;

    let mut config = RunConfig {
        backend,
        strategy,
        seed,
        cache_dir,
        output_dir,
        ..defaults
    };
    if let Some(raw) = file.get("run.failure_threshold") {
        config.failure_threshold = parse_typed("run.failure_threshold", raw)?;
    }
    if let Some(raw) = file.get("embedding.pca_k") {
        config.pca_k = parse_typed("embedding.pca_k", raw)?;
    }
    if let Some(raw) = file.get("embedding.classifier") {
        config.classifier = parse_typed("embedding.classifier", raw)?;
    }
    if let Some(raw) = file.get("embedding.lowercase") {
        config.preprocess.lowercase = parse_bool("embedding.lowercase", raw)?;
    }
    if let Some(raw) = file.get("embedding.remove_stopwords") {
        config.preprocess.remove_stopwords = parse_bool("embedding.remove_stopwords", raw)?;
    }
    if let Some(raw) = file.get("embedding.batch_size") {
        config.embed_batch_size = parse_typed("embedding.batch_size", raw)?;
    }
    for (key, slot) in [
        ("nuance.slang_lexicon", &mut config.slang_lexicon),
        (
            "nuance.abbreviation_lexicon",
            &mut config.abbreviation_lexicon,
        ),
        ("nuance.manual_annotations", &mut config.manual_annotations),
        ("nuance.contrast_lexicon", &mut config.contrast_lexicon),
    ] {
        if let Some(raw) = file.get(key) {
            *slot = Some(PathBuf::from(raw));
        }
    }

    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    if config.output_dir == config.cache_dir {
        return Err(ConfigError::Invalid(format!(
            "output_dir and cache_dir must differ (both are {})",
            config.output_dir.display()
        )));
    }
    if config.pca_k == 0 {
        return Err(ConfigError::Invalid("pca_k must be >= 1".into()));
    }
    if config.embed_batch_size == 0 {
        return Err(ConfigError::Invalid("batch_size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&config.failure_threshold) {
        return Err(ConfigError::Invalid(format!(
            "failure_threshold must be within [0, 1], got {}",
            config.failure_threshold
        )));
    }
    Ok(())
}
