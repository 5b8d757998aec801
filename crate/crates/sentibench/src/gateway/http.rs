//! OpenAI-compatible HTTP transport.
//!
//! Three endpoints are spoken: `POST {base_url}/chat/completions`,
//! `POST {base_url}/completions`, and `POST {base_url}/embeddings`, with
//! JSON bodies and an optional bearer token taken from the configured
//! environment variable. Retry and concurrency policy live in the
//! [`Gateway`](super::Gateway) layer above; this type maps one request to
//! one wire call and classifies failures.

use ureq::config::Config;
use ureq::Agent;

use super::response::{ChatResponse, CompletionResponse, EmbeddingResponse};
use super::{
    Backend, BackendConfig, ChatRequest, CompletionRequest, EmbeddingRequest, GatewayError,
};

/// Blocking HTTP client for OpenAI-compatible endpoints.
pub struct HttpBackend {
    agent: Agent,
    base_url: String,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Builds the client; the bearer token is read from the environment
    /// variable named in the config (and only from there). A missing
    /// variable is allowed — local endpoints often require no key.
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent = Config::builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.request_timeout))
            .build()
            .new_agent();
        Ok(HttpBackend {
            agent,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(&config.api_key_env).ok(),
        })
    }

    /// POSTs `body` to `{base_url}{path}` and returns the response text,
    /// classifying HTTP failures into gateway errors.
    fn post(&self, path: &str, body: &impl serde::Serialize) -> Result<String, GatewayError> {
        let url = format!("{}{}", self.base_url, path);
        let mut request = self.agent.post(&url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response = request
            .send_json(body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;

        let status = response.status().as_u16();
        let text = response
            .into_body()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;

        match status {
            200..=299 => Ok(text),
            401 | 403 => Err(GatewayError::AuthFailure(short(&text))),
            429 => Err(GatewayError::RateLimited { attempts: 0 }),
            500..=599 => Err(GatewayError::Transport(format!(
                "server error {status}: {}",
                short(&text)
            ))),
            other => Err(GatewayError::MalformedResponse(format!(
                "unexpected status {other}: {}",
                short(&text)
            ))),
        }
    }
}

impl Backend for HttpBackend {
    fn chat(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let text = self.post("/chat/completions", request)?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        parsed.first_content()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let text = self.post("/completions", request)?;
        let parsed: CompletionResponse = serde_json::from_str(&text)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        parsed.first_text()
    }

    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<Vec<f64>>, GatewayError> {
        let text = self.post("/embeddings", request)?;
        let parsed: EmbeddingResponse = serde_json::from_str(&text)
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        parsed.rows_in_order()
    }
}

/// Clips error bodies so they stay readable in logs.
fn short(text: &str) -> String {
    const MAX: usize = 200;
    if text.chars().count() <= MAX {
        text.to_string()
    } else {
        let cut: String = text.chars().take(MAX).collect();
        format!("{cut}…")
    }
}
