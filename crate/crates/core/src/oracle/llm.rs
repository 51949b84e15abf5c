//! Chat-completion judge: one single-turn request per pair, retried with
//! exponential backoff, verdict parsed from the reply text.

use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, OracleError, Result};
use crate::oracle::{fingerprint_of, EdgeOracle, PairQuery, PromptTemplate};

/// Configuration of the external judge endpoint.
#[derive(Debug, Clone)]
pub struct LlmOracleConfig {
    /// Full chat-completion URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Bearer token, sent as `Authorization: Bearer <key>` when present.
    pub api_key: Option<String>,
    pub template: PromptTemplate,
    pub timeout: Duration,
    /// Total attempts per pair (transport, status, and verdict failures all retry).
    pub max_retries: u32,
    /// First backoff delay; doubles per attempt.
    pub initial_backoff: Duration,
    /// Concurrency cap used by adjacency assembly.
    pub max_inflight: usize,
    pub temperature: f64,
}

impl LlmOracleConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            template: PromptTemplate::default(),
            timeout: Duration::from_secs(30),
            max_retries: 5,
            initial_backoff: Duration::from_secs(1),
            max_inflight: 4,
            temperature: 0.0,
        }
    }
}

/// Judge backed by a chat-completion endpoint.
pub struct LlmOracle {
    config: LlmOracleConfig,
    client: reqwest::blocking::Client,
}

impl LlmOracle {
    pub fn new(config: LlmOracleConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::InvalidInput("empty endpoint URL".into()));
        }
        if config.model.is_empty() {
            return Err(Error::InvalidInput("empty model name".into()));
        }
        if config.max_retries == 0 {
            return Err(Error::InvalidInput("max_retries must be >= 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::InvalidInput(format!("HTTP client setup: {e}")))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &LlmOracleConfig {
        &self.config
    }

    /// Sends one judged pair through the endpoint, retrying per configuration.
    pub fn judge_texts(
        &self,
        text_a: &str,
        text_b: &str,
    ) -> std::result::Result<bool, OracleError> {
        let prompt = self.config.template.render(text_a, text_b);
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });

        let mut last_error: Option<OracleError> = None;
        for attempt in 1..=self.config.max_retries {
            if attempt > 1 {
                let factor = 1u32 << (attempt - 2).min(16);
                std::thread::sleep(self.config.initial_backoff * factor);
            }
            match self.attempt(&body, attempt) {
                Ok(verdict) => return Ok(verdict),
                Err(e) => last_error = Some(e),
            }
        }
        Err(last_error.expect("at least one attempt was made"))
    }

    fn attempt(&self, body: &Value, attempts: u32) -> std::result::Result<bool, OracleError> {
        let mut request = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| OracleError::Transport {
            attempts,
            message: e.to_string(),
        })?;
        let status = response.status();
        let text = response.text().map_err(|e| OracleError::Transport {
            attempts,
            message: format!("reading body: {e}"),
        })?;
        if !status.is_success() {
            return Err(OracleError::HttpStatus {
                status: status.as_u16(),
                attempts,
                body: text.chars().take(200).collect(),
            });
        }
        let reply = extract_reply(&text)?;
        parse_verdict(&reply).ok_or(OracleError::UnparseableVerdict {
            attempts,
            reply: reply.chars().take(200).collect(),
        })
    }
}

/// Pulls the assistant text out of a chat-completion response body.
fn extract_reply(body: &str) -> std::result::Result<String, OracleError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| OracleError::MalformedResponse(format!("invalid JSON: {e}")))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| OracleError::MalformedResponse("missing choices[0].message.content".into()))
}

/// Extracts a boolean verdict from a judge reply.
///
/// Case-insensitive scan for the first standalone token `TRUE` or `FALSE`
/// (a prefix match is the first iteration of the scan). Returns `None` when
/// no such token exists.
pub fn parse_verdict(reply: &str) -> Option<bool> {
    for token in reply.split(|c: char| !c.is_ascii_alphanumeric()) {
        if token.is_empty() {
            continue;
        }
        if token.eq_ignore_ascii_case("true") {
            return Some(true);
        }
        if token.eq_ignore_ascii_case("false") {
            return Some(false);
        }
    }
    None
}

impl EdgeOracle for LlmOracle {
    fn judge(&self, query: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
        self.judge_texts(query.text_i, query.text_j)
    }

    fn fingerprint(&self) -> String {
        fingerprint_of(&[
            "llm",
            &self.config.endpoint,
            &self.config.model,
            self.config.template.id(),
            &self.config.temperature.to_bits().to_string(),
        ])
    }

    fn symmetric_by_construction(&self) -> bool {
        // the prompt asks for mutual implication, but a sampled reply can
        // still differ across orders
        false
    }
}
