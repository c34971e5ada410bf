//! Blocking chat-completion client with exponential backoff and full
//! jitter. Transient failures (connection errors, timeouts, 429s, 5xx)
//! are retried up to the attempt cap; auth and protocol problems fail
//! fast.

use std::sync::OnceLock;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AgentError, ChatMessage};

/// Environment variable holding the API credential.
pub const API_KEY_VAR: &str = "PERSONA_GAUGE_API_KEY";
/// Environment variable overriding the endpoint URL at request time.
pub const ENDPOINT_VAR: &str = "PERSONA_GAUGE_ENDPOINT";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub model_id: String,
    pub temperature: f64,
    /// Endpoint URL; PERSONA_GAUGE_ENDPOINT overrides, then this, then
    /// the standard chat-completions URL.
    pub endpoint: Option<String>,
    /// Credential override for tests; None reads PERSONA_GAUGE_API_KEY.
    pub api_key: Option<String>,
}

impl RemoteConfig {
    pub fn new(model_id: impl Into<String>, temperature: f64) -> Self {
        Self {
            model_id: model_id.into(),
            temperature,
            endpoint: None,
            api_key: None,
        }
    }

    pub fn with_endpoint(mut self, url: impl Into<String>) -> Self {
        self.endpoint = Some(url.into());
        self
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    fn resolve_endpoint(&self) -> String {
        std::env::var(ENDPOINT_VAR)
            .ok()
            .filter(|v| !v.is_empty())
            .or_else(|| self.endpoint.clone())
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string())
    }

    fn resolve_key(&self) -> Result<String, AgentError> {
        self.api_key
            .clone()
            .or_else(|| std::env::var(API_KEY_VAR).ok())
            .filter(|k| !k.is_empty())
            .ok_or(AgentError::AuthMissing)
    }
}

/// 5 attempts, 1 s base delay, doubling, full jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Instant retries, for tests.
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
            factor: 1.0,
        }
    }

    /// Full jitter: uniform in [0, base·factor^(attempt-1)].
    fn backoff(&self, attempt: u32) -> Duration {
        let cap = self.base_delay.as_secs_f64() * self.factor.powi(attempt as i32 - 1);
        if cap <= 0.0 {
            return Duration::ZERO;
        }
        Duration::from_secs_f64(rand::thread_rng().gen_range(0.0..cap))
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

fn http_client() -> &'static reqwest::blocking::Client {
    static CLIENT: OnceLock<reqwest::blocking::Client> = OnceLock::new();
    CLIENT.get_or_init(|| {
        reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .expect("client builds")
    })
}

enum FailureKind {
    Network(String),
    RateLimited,
    Timeout,
}

impl FailureKind {
    fn into_error(self, attempts: u32) -> AgentError {
        match self {
            FailureKind::Network(detail) => AgentError::Network { attempts, detail },
            FailureKind::RateLimited => AgentError::RateLimited { attempts },
            FailureKind::Timeout => AgentError::Timeout { attempts },
        }
    }
}

enum Attempt {
    Success(String),
    /// Worth retrying: connection trouble, timeouts, 429s, 5xx.
    Transient(FailureKind),
    /// Retrying cannot help: auth rejection, malformed replies.
    Fatal(AgentError),
}

fn attempt_once(config: &RemoteConfig, messages: &[ChatMessage], key: &str) -> Attempt {
    let body = WireRequest {
        model: &config.model_id,
        messages,
        temperature: config.temperature,
    };
    let response = match http_client()
        .post(config.resolve_endpoint())
        .bearer_auth(key)
        .json(&body)
        .send()
    {
        Ok(r) => r,
        Err(e) if e.is_timeout() => return Attempt::Transient(FailureKind::Timeout),
        Err(e) => return Attempt::Transient(FailureKind::Network(e.to_string())),
    };

    let status = response.status();
    if status.as_u16() == 429 {
        return Attempt::Transient(FailureKind::RateLimited);
    }
    if status.is_server_error() {
        return Attempt::Transient(FailureKind::Network(format!("server status {status}")));
    }
    if status.as_u16() == 401 || status.as_u16() == 403 {
        return Attempt::Fatal(AgentError::AuthMissing);
    }
    if !status.is_success() {
        return Attempt::Fatal(AgentError::Protocol(format!("unexpected status {status}")));
    }
    let parsed: Result<WireResponse, _> = response.json();
    match parsed {
        Ok(r) => match r.choices.into_iter().next() {
            Some(c) => Attempt::Success(c.message.content),
            None => Attempt::Fatal(AgentError::Protocol("empty choices array".to_string())),
        },
        Err(e) => Attempt::Fatal(AgentError::Protocol(format!("bad response body: {e}"))),
    }
}

/// Sends the request, retrying transient failures per the policy.
pub fn complete_remote(
    config: &RemoteConfig,
    messages: &[ChatMessage],
    retry: &RetryPolicy,
) -> Result<String, AgentError> {
    let key = config.resolve_key()?;
    let attempts = retry.attempts.max(1);
    let mut last_failure = FailureKind::Network("no attempt made".to_string());
    for attempt in 1..=attempts {
        match attempt_once(config, messages, &key) {
            Attempt::Success(text) => return Ok(text),
            Attempt::Fatal(fatal) => return Err(fatal),
            Attempt::Transient(transient) => last_failure = transient,
        }
        if attempt < attempts {
            std::thread::sleep(retry.backoff(attempt));
        }
    }
    Err(last_failure.into_error(attempts))
}
