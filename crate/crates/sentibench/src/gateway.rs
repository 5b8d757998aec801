//! Backend abstraction for chat completion, plain completion, and embedding
//! requests, plus the prompt-strategy prediction pipeline built on top of it.
//!
//! A [`Gateway`] wraps a [`Backend`] with retry, backoff, and a global
//! in-flight concurrency bound. Two backends ship with the crate: an
//! OpenAI-compatible HTTP client ([`http::HttpBackend`]) and a fully
//! deterministic offline mock ([`mock::MockBackend`]) selected by the
//! reserved URL scheme `mock://`.

pub mod http;
pub mod mock;
pub mod prompts;
pub mod response;
pub mod vote;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{SentimentLabel, Tweet};

pub use response::parse_sentiment_response;
pub use vote::majority_vote;

/// Which of the three classification strategies produced a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Prompt,
    Finetuned,
    Embedding,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Prompt => "prompt",
            Strategy::Finetuned => "finetuned",
            Strategy::Embedding => "embedding",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "prompt" => Ok(Strategy::Prompt),
            "finetuned" => Ok(Strategy::Finetuned),
            "embedding" => Ok(Strategy::Embedding),
            other => Err(format!(
                "unknown strategy {other:?} (expected prompt, finetuned, or embedding)"
            )),
        }
    }
}

/// Prediction-side label space: the three sentiment classes plus the
/// model-initiated `Mixed` answer and a marker for unparseable responses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictedLabel {
    Negative,
    Neutral,
    Positive,
    Mixed,
    Unparseable,
}

impl PredictedLabel {
    /// All variants in a fixed order (the three classes first).
    pub const ALL: [PredictedLabel; 5] = [
        PredictedLabel::Negative,
        PredictedLabel::Neutral,
        PredictedLabel::Positive,
        PredictedLabel::Mixed,
        PredictedLabel::Unparseable,
    ];

    pub fn from_sentiment(label: SentimentLabel) -> Self {
        match label {
            SentimentLabel::Negative => PredictedLabel::Negative,
            SentimentLabel::Neutral => PredictedLabel::Neutral,
            SentimentLabel::Positive => PredictedLabel::Positive,
        }
    }

    /// The underlying 3-class label, if this is one of the three classes.
    pub fn as_sentiment(self) -> Option<SentimentLabel> {
        match self {
            PredictedLabel::Negative => Some(SentimentLabel::Negative),
            PredictedLabel::Neutral => Some(SentimentLabel::Neutral),
            PredictedLabel::Positive => Some(SentimentLabel::Positive),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PredictedLabel::Negative => "negative",
            PredictedLabel::Neutral => "neutral",
            PredictedLabel::Positive => "positive",
            PredictedLabel::Mixed => "mixed",
            PredictedLabel::Unparseable => "unparseable",
        }
    }
}

impl fmt::Display for PredictedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PredictedLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "negative" => Ok(PredictedLabel::Negative),
            "neutral" => Ok(PredictedLabel::Neutral),
            "positive" => Ok(PredictedLabel::Positive),
            "mixed" => Ok(PredictedLabel::Mixed),
            "unparseable" => Ok(PredictedLabel::Unparseable),
            other => Err(format!("unknown predicted label {other:?}")),
        }
    }
}

/// Environment variable consulted for the API key by default.
pub const DEFAULT_API_KEY_ENV: &str = "SENTIBENCH_API_KEY";

/// Connection and run parameters for a backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Endpoint base URL; the reserved scheme `mock://` selects the mock backend.
    pub base_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the bearer token. The key
    /// itself is never stored in configuration.
    pub api_key_env: String,
    pub temperature: f64,
    /// Number of votes per tweet for the prompt strategy.
    pub vote_count: usize,
    /// Retries after the first attempt (4 retries = 5 attempts total).
    pub max_retries: u32,
    pub request_timeout: Duration,
    /// Global bound on concurrently in-flight backend requests.
    pub max_concurrency: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model_id: "gpt-3.5-turbo".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            temperature: 0.0,
            vote_count: 3,
            max_retries: 4,
            request_timeout: Duration::from_secs(30),
            max_concurrency: 4,
        }
    }
}

impl BackendConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        BackendConfig {
            base_url: base_url.into(),
            model_id: model_id.into(),
            ..BackendConfig::default()
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_vote_count(mut self, vote_count: usize) -> Self {
        self.vote_count = vote_count;
        self
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.request_timeout = timeout;
        self
    }

    pub fn with_max_concurrency(mut self, max_concurrency: usize) -> Self {
        self.max_concurrency = max_concurrency;
        self
    }

    /// Checks the config invariants.
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.base_url.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("base_url is empty".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model_id is empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.vote_count == 0 {
            return Err(GatewayError::InvalidConfig("vote_count must be >= 1".into()));
        }
        if self.max_concurrency == 0 {
            return Err(GatewayError::InvalidConfig(
                "max_concurrency must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Whether the base URL selects the offline mock backend.
    pub fn is_mock(&self) -> bool {
        self.base_url.starts_with("mock://")
    }
}

/// Chat message role on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// Serializes a whole-valued temperature as the integer `0`/`1`/… rather
/// than `0.0`, matching the wire convention of sending `"temperature": 0`.
fn serialize_temperature<S: serde::Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
    if t.fract() == 0.0 && t.is_finite() && t.abs() < i64::MAX as f64 {
        s.serialize_i64(*t as i64)
    } else {
        s.serialize_f64(*t)
    }
}

/// Wire payload for `POST {base_url}/chat/completions`.
#[derive(Clone, Debug, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    #[serde(serialize_with = "serialize_temperature")]
    pub temperature: f64,
}

/// Wire payload for `POST {base_url}/completions`.
#[derive(Clone, Debug, Serialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    #[serde(serialize_with = "serialize_temperature")]
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

/// Wire payload for `POST {base_url}/embeddings`.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingRequest {
    pub model: String,
    pub input: Vec<String>,
}

/// Gateway and backend failure modes.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited (gave up after {attempts} attempts)")]
    RateLimited { attempts: u32 },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("embedding rows have unequal dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("majority vote requires at least one label")]
    EmptyVoteInput,
}

impl GatewayError {
    /// Transient failures worth retrying; auth and protocol errors are not.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            GatewayError::Transport(_) | GatewayError::RateLimited { .. }
        )
    }
}

/// A per-tweet prediction record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub tweet_id: String,
    pub strategy: Strategy,
    /// Raw backend response texts, one per vote for the prompt strategy.
    pub raw_responses: Vec<String>,
    pub voted: PredictedLabel,
    pub tie: bool,
    pub reasoning: Option<String>,
}

/// Pluggable transport: everything the gateway needs from a model endpoint.
pub trait Backend: Send + Sync {
    /// Returns the first choice's message content.
    fn chat(&self, request: &ChatRequest) -> Result<String, GatewayError>;
    /// Returns the first choice's completion text.
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
    /// Returns one embedding row per input, in input order.
    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<Vec<f64>>, GatewayError>;
    /// Supplies gold labels keyed by tweet text. Only the mock backend's
    /// gold-echo mode consumes these; real backends ignore them.
    fn install_gold(&self, _gold: &HashMap<String, SentimentLabel>) {}
}

/// Process-wide request counters, one per endpoint kind. Each backend
/// attempt (including retries) increments exactly one counter, which is
/// what makes resume behaviour externally verifiable.
pub mod counters {
    use super::*;

    pub(super) static CHAT: AtomicU64 = AtomicU64::new(0);
    pub(super) static COMPLETE: AtomicU64 = AtomicU64::new(0);
    pub(super) static EMBED: AtomicU64 = AtomicU64::new(0);

    /// A point-in-time view of the counters.
    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub struct RequestCounts {
        pub chat: u64,
        pub complete: u64,
        pub embed: u64,
    }

    impl RequestCounts {
        pub fn total(&self) -> u64 {
            self.chat + self.complete + self.embed
        }
    }

    pub fn snapshot() -> RequestCounts {
        RequestCounts {
            chat: CHAT.load(Ordering::SeqCst),
            complete: COMPLETE.load(Ordering::SeqCst),
            embed: EMBED.load(Ordering::SeqCst),
        }
    }
}

/// Counting semaphore bounding in-flight backend requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct SemaphorePermit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphorePermit(self)
    }
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.0.permits.lock().unwrap();
        *permits += 1;
        self.0.available.notify_one();
    }
}

/// Retry-and-rate-limit layer over a [`Backend`], safe for concurrent use.
pub struct Gateway {
    config: BackendConfig,
    backend: Box<dyn Backend>,
    limiter: Semaphore,
    /// Base delay of the exponential backoff; tests shrink it to zero.
    backoff_base: Duration,
}

impl Gateway {
    /// Builds a gateway, selecting the backend from the base URL scheme:
    /// `mock://…` yields the deterministic mock, anything else the HTTP client.
    pub fn from_config(config: BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let backend: Box<dyn Backend> = if config.is_mock() {
            Box::new(mock::MockBackend::from_url(&config.base_url)?)
        } else {
            Box::new(http::HttpBackend::new(&config)?)
        };
        Ok(Self::with_backend(config, backend))
    }

    /// Builds a gateway over an explicit backend (mainly for tests).
    pub fn with_backend(config: BackendConfig, backend: Box<dyn Backend>) -> Self {
        let limiter = Semaphore::new(config.max_concurrency.max(1));
        Gateway {
            config,
            backend,
            limiter,
            backoff_base: Duration::from_secs(1),
        }
    }

    /// Overrides the backoff base delay (used by tests to avoid sleeping).
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Forwards gold labels to the backend (a no-op for real endpoints).
    pub fn install_gold(&self, gold: &HashMap<String, SentimentLabel>) {
        self.backend.install_gold(gold);
    }

    /// Runs `op` under the concurrency bound with retry on transient
    /// failures: exponential backoff starting at the base delay, factor 2,
    /// ±20% jitter, at most `max_retries` retries after the first attempt.
    fn with_retries<T>(
        &self,
        counter: &AtomicU64,
        op: impl Fn() -> Result<T, GatewayError>,
    ) -> Result<T, GatewayError> {
        let max_attempts = self.config.max_retries as u64 + 1;
        let mut attempt = 0u64;
        loop {
            attempt += 1;
            let result = {
                let _permit = self.limiter.acquire();
                counter.fetch_add(1, Ordering::SeqCst);
                op()
            };
            match result {
                Ok(value) => return Ok(value),
                Err(err) if err.is_retryable() && attempt < max_attempts => {
                    std::thread::sleep(jittered_backoff(self.backoff_base, attempt));
                }
                Err(GatewayError::RateLimited { .. }) => {
                    return Err(GatewayError::RateLimited {
                        attempts: attempt as u32,
                    });
                }
                Err(err) => return Err(err),
            }
        }
    }

    /// Sends a chat-completion request and returns the first choice's text.
    pub fn chat_complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        if messages.is_empty() {
            return Err(GatewayError::InvalidInput("empty message sequence".into()));
        }
        let request = ChatRequest {
            model: self.config.model_id.clone(),
            messages: messages.to_vec(),
            temperature: self.config.temperature,
        };
        self.with_retries(&counters::CHAT, || self.backend.chat(&request))
    }

    /// Sends a plain completion request, passing the stop sequence through.
    pub fn complete(&self, prompt: &str, stop: Option<&str>) -> Result<String, GatewayError> {
        let request = CompletionRequest {
            model: self.config.model_id.clone(),
            prompt: prompt.to_string(),
            temperature: self.config.temperature,
            stop: stop.map(|s| vec![s.to_string()]),
            max_tokens: Some(8),
        };
        self.with_retries(&counters::COMPLETE, || self.backend.complete(&request))
    }

    /// Embeds a batch of texts; rows come back in input order with a
    /// uniform dimension.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidInput("empty text batch".into()));
        }
        if let Some(pos) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(GatewayError::InvalidInput(format!(
                "text at index {pos} is empty"
            )));
        }
        let request = EmbeddingRequest {
            model: self.config.model_id.clone(),
            input: texts.to_vec(),
        };
        let rows = self.with_retries(&counters::EMBED, || self.backend.embed(&request))?;
        if rows.len() != texts.len() {
            return Err(GatewayError::MalformedResponse(format!(
                "expected {} embedding rows, got {}",
                texts.len(),
                rows.len()
            )));
        }
        if let Some(first) = rows.first() {
            let dim = first.len();
            for row in &rows {
                if row.len() != dim {
                    return Err(GatewayError::DimensionMismatch(dim, row.len()));
                }
            }
        }
        Ok(rows)
    }

    /// Runs the prompt strategy for one tweet: `vote_count` independent
    /// chat calls, each parsed and then majority-voted.
    ///
    /// A call that still fails after retries marks its slot `Unparseable`
    /// (recording the error text) rather than failing the tweet; the tweet
    /// errors out only when every slot failed.
    pub fn predict_prompt_strategy(&self, tweet: &Tweet) -> Result<Prediction, GatewayError> {
        let messages = prompts::render_classification_messages(tweet)?;
        let mut raw_responses = Vec::with_capacity(self.config.vote_count);
        let mut labels = Vec::with_capacity(self.config.vote_count);
        let mut last_error = None;
        let mut failures = 0usize;
        for _ in 0..self.config.vote_count {
            match self.chat_complete(&messages) {
                Ok(raw) => {
                    labels.push(response::parse_sentiment_response(&raw));
                    raw_responses.push(raw);
                }
                Err(err) => {
                    failures += 1;
                    raw_responses.push(format!("<error: {err}>"));
                    labels.push(PredictedLabel::Unparseable);
                    last_error = Some(err);
                }
            }
        }
        if failures == self.config.vote_count {
            if let Some(err) = last_error {
                return Err(err);
            }
        }
        let (voted, tie) = vote::majority_vote(&labels)?;
        Ok(Prediction {
            tweet_id: tweet.id.clone(),
            strategy: Strategy::Prompt,
            raw_responses,
            voted,
            tie,
            reasoning: None,
        })
    }
}

/// Exponential backoff with ±20% jitter: `base * 2^(attempt-1) * U(0.8, 1.2)`.
fn jittered_backoff(base: Duration, attempt: u64) -> Duration {
    use rand::Rng;
    let exp = base.as_secs_f64() * 2f64.powi(attempt.saturating_sub(1).min(16) as i32);
    let factor = rand::rng().random_range(0.8..=1.2);
    Duration::from_secs_f64(exp * factor)
}
