//! Deterministic offline stand-in for the remote model endpoints.
//!
//! Selected by the reserved base-URL scheme `mock://`, with behaviour
//! encoded as query parameters:
//!
//! ```text
//! mock://demo?seed=42                         label from a distribution (default)
//! mock://demo?seed=42&mode=dist&pneg=1&pneu=2&ppos=1
//! mock://demo?seed=42&mode=gold-echo&epsilon=0.1
//! mock://demo?seed=42&mode=echo               gold-echo with epsilon 0
//! mock://demo?dim=64                          embedding dimension
//! ```
//!
//! Every response is a pure function of `(seed, model_id, request payload)`:
//! the payload JSON is hashed with SHA-256 and the digest seeds a ChaCha8
//! stream, so identical requests yield identical bytes — across calls,
//! threads, and processes. Gold-echo mode answers with the tweet's gold
//! label with probability `1 − ε`, otherwise uniformly with one of the two
//! *wrong* classes, making the expected downstream accuracy exactly `1 − ε`.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use url::Url;

use crate::corpus::SentimentLabel;
use crate::finetune::DEFAULT_SEPARATOR;

use super::prompts::CLASSIFICATION_PROMPT;
use super::{
    Backend, ChatRequest, CompletionRequest, EmbeddingRequest, GatewayError, PredictedLabel,
};

/// How the mock chooses chat/completion answers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MockMode {
    /// Sample a label from the configured distribution per payload.
    Distribution,
    /// Echo the installed gold label, corrupted with probability `epsilon`.
    GoldEcho { epsilon: f64 },
}

/// Per-label sampling weights for [`MockMode::Distribution`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelWeights {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
    pub mixed: f64,
    pub unparseable: f64,
}

impl Default for LabelWeights {
    fn default() -> Self {
        LabelWeights {
            negative: 1.0,
            neutral: 1.0,
            positive: 1.0,
            mixed: 0.0,
            unparseable: 0.0,
        }
    }
}

/// The deterministic mock backend.
pub struct MockBackend {
    seed: u64,
    mode: MockMode,
    weights: LabelWeights,
    embedding_dim: usize,
    gold: Mutex<HashMap<String, SentimentLabel>>,
}

impl MockBackend {
    /// Parses a `mock://` URL into a configured backend.
    pub fn from_url(base_url: &str) -> Result<Self, GatewayError> {
        let url = Url::parse(base_url)
            .map_err(|e| GatewayError::InvalidConfig(format!("bad mock URL {base_url:?}: {e}")))?;
        if url.scheme() != "mock" {
            return Err(GatewayError::InvalidConfig(format!(
                "expected mock:// scheme, got {:?}",
                url.scheme()
            )));
        }

        let mut seed = 0u64;
        let mut mode_name = "dist".to_string();
        let mut epsilon = 0.1f64;
        let mut weights = LabelWeights::default();
        let mut embedding_dim = 64usize;

        for (key, value) in url.query_pairs() {
            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| {
                    GatewayError::InvalidConfig(format!("mock parameter {key}={v:?} is not a number"))
                })
            };
            match key.as_ref() {
                "seed" => {
                    seed = value.parse().map_err(|_| {
                        GatewayError::InvalidConfig(format!("mock seed {value:?} is not an integer"))
                    })?;
                }
                "mode" => mode_name = value.to_string(),
                "epsilon" => epsilon = parse_f64(&value)?,
                "pneg" => weights.negative = parse_f64(&value)?,
                "pneu" => weights.neutral = parse_f64(&value)?,
                "ppos" => weights.positive = parse_f64(&value)?,
                "pmixed" => weights.mixed = parse_f64(&value)?,
                "punp" => weights.unparseable = parse_f64(&value)?,
                "dim" => {
                    embedding_dim = value.parse().map_err(|_| {
                        GatewayError::InvalidConfig(format!("mock dim {value:?} is not an integer"))
                    })?;
                }
                other => {
                    return Err(GatewayError::InvalidConfig(format!(
                        "unknown mock parameter {other:?}"
                    )));
                }
            }
        }

        let mode = match mode_name.as_str() {
            "dist" => MockMode::Distribution,
            "gold-echo" => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(GatewayError::InvalidConfig(format!(
                        "epsilon must be in [0, 1], got {epsilon}"
                    )));
                }
                MockMode::GoldEcho { epsilon }
            }
            "echo" => MockMode::GoldEcho { epsilon: 0.0 },
            other => {
                return Err(GatewayError::InvalidConfig(format!(
                    "unknown mock mode {other:?} (expected dist, gold-echo, or echo)"
                )));
            }
        };
        if embedding_dim == 0 {
            return Err(GatewayError::InvalidConfig("mock dim must be >= 1".into()));
        }

        Ok(MockBackend {
            seed,
            mode,
            weights,
            embedding_dim,
            gold: Mutex::new(HashMap::new()),
        })
    }

    /// RNG seeded from (mock seed, model id, arbitrary payload bytes).
    fn rng_for(&self, model: &str, payload: &[u8]) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(model.as_bytes());
        hasher.update(payload);
        let digest = hasher.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(u64::from_le_bytes(word))
    }

    fn sample_distribution(&self, rng: &mut ChaCha8Rng) -> PredictedLabel {
        let weights = [
            self.weights.negative,
            self.weights.neutral,
            self.weights.positive,
            self.weights.mixed,
            self.weights.unparseable,
        ];
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return PredictedLabel::Neutral;
        }
        let mut point = rng.random_range(0.0..total);
        for (weight, label) in weights.iter().zip(PredictedLabel::ALL) {
            if point < *weight {
                return label;
            }
            point -= weight;
        }
        PredictedLabel::Unparseable
    }

    /// Gold-echo draw: the gold label with probability 1−ε, otherwise one
    /// of the two wrong classes, uniformly.
    fn gold_echo(&self, gold: SentimentLabel, epsilon: f64, rng: &mut ChaCha8Rng) -> SentimentLabel {
        if rng.random::<f64>() < 1.0 - epsilon {
            gold
        } else {
            let wrong: Vec<SentimentLabel> = SentimentLabel::ALL
                .into_iter()
                .filter(|&l| l != gold)
                .collect();
            wrong[rng.random_range(0..wrong.len())]
        }
    }

    fn lookup_gold(&self, text: &str) -> Option<SentimentLabel> {
        let gold = self.gold.lock().unwrap();
        gold.get(text).copied().or_else(|| {
            // Completion prompts carry the fine-tune separator suffix.
            text.strip_suffix(DEFAULT_SEPARATOR)
                .and_then(|stripped| gold.get(stripped).copied())
        })
    }

    /// Produces the parsed-label answer for a classification-style request.
    fn classify(&self, model: &str, payload: &[u8], text: &str) -> PredictedLabel {
        let mut rng = self.rng_for(model, payload);
        match self.mode {
            MockMode::Distribution => self.sample_distribution(&mut rng),
            MockMode::GoldEcho { epsilon } => match self.lookup_gold(text) {
                Some(gold) => {
                    PredictedLabel::from_sentiment(self.gold_echo(gold, epsilon, &mut rng))
                }
                // No gold installed for this text: fall back to sampling.
                None => self.sample_distribution(&mut rng),
            },
        }
    }
}

impl Backend for MockBackend {
    fn chat(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let payload = serde_json::to_vec(request)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        let is_classification = request
            .messages
            .first()
            .is_some_and(|m| m.content == CLASSIFICATION_PROMPT);
        let user_text = request
            .messages
            .iter()
            .rev()
            .find(|m| matches!(m.role, super::Role::User))
            .map(|m| m.content.as_str())
            .unwrap_or("");

        if is_classification {
            let label = self.classify(&request.model, &payload, user_text);
            // Answer in the prompt's own terms: a digit for the three
            // classes, the word for a mixed call, filler for unparseable.
            Ok(match label {
                PredictedLabel::Negative => "0".to_string(),
                PredictedLabel::Neutral => "1".to_string(),
                PredictedLabel::Positive => "2".to_string(),
                PredictedLabel::Mixed => "The sentiment is mixed.".to_string(),
                PredictedLabel::Unparseable => "I cannot determine the sentiment.".to_string(),
            })
        } else {
            // Non-classification chats (for example reasoning requests) get
            // a deterministic, clearly synthetic analysis text.
            let mut rng = self.rng_for(&request.model, &payload);
            let token: u32 = rng.random();
            Ok(format!(
                "Deterministic mock analysis {token:08x}: the statement {:?} is read literally; \
                 no live model was consulted.",
                truncate(user_text, 60)
            ))
        }
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let payload = serde_json::to_vec(request)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        let label = self.classify(&request.model, &payload, &request.prompt);
        // Completion models answer in fine-tune format: a leading-space
        // label word, as a single-token completion would.
        Ok(match label {
            PredictedLabel::Negative => " negative".to_string(),
            PredictedLabel::Neutral => " neutral".to_string(),
            PredictedLabel::Positive => " positive".to_string(),
            PredictedLabel::Mixed => " mixed".to_string(),
            PredictedLabel::Unparseable => " ???".to_string(),
        })
    }

    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<Vec<f64>>, GatewayError> {
        // Rows depend only on (seed, model, text) — not on batch
        // composition — so identical texts embed identically everywhere.
        let rows = request
            .input
            .iter()
            .map(|text| {
                let mut rng = self.rng_for(&request.model, text.as_bytes());
                (0..self.embedding_dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        Ok(rows)
    }

    fn install_gold(&self, gold: &HashMap<String, SentimentLabel>) {
        let mut map = self.gold.lock().unwrap();
        map.extend(gold.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

fn truncate(s: &str, max_chars: usize) -> &str {
    match s.char_indices().nth(max_chars) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}
