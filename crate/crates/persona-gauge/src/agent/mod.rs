//! Uniform agent abstraction: a remote chat-completion backend with
//! retries and a content-addressed response cache, plus scripted
//! synthetic policies that stand in for models during tests and oracles.
//!
//! Both backends answer the same rendered prompt text, so parsers and
//! task loops never know which kind of agent they are talking to.

pub mod cache;
pub mod mock;
pub mod policy;
pub mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persona::{render_role_prompt, PersonaProfile};
pub use cache::{cache_key, ResponseCache};
pub use mock::{MockChatServer, MockReply, MockRequest};
pub use policy::{parse_policy_spec, prompt_digest, AnswerKey, Policy};
pub use remote::{complete_remote, RemoteConfig, RetryPolicy, API_KEY_VAR, ENDPOINT_VAR};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no API credential: set {API_KEY_VAR}")]
    AuthMissing,
    #[error("network failure after {attempts} attempt(s): {detail}")]
    Network { attempts: u32, detail: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("malformed chat response: {0}")]
    Protocol(String),
    #[error("cache entry corrupt at {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error("cache I/O at {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("messages must be non-empty with non-empty content")]
    InvalidMessages,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    Remote(RemoteConfig),
    Scripted(Policy),
}

/// An agent under evaluation: an optional persona plus a backend.
/// Scripted backends never read the persona text; it only labels output.
#[derive(Debug, Clone)]
pub struct AgentHandle {
    pub persona: Option<PersonaProfile>,
    backend: Backend,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
}

impl AgentHandle {
    pub fn scripted(policy: Policy) -> Self {
        Self {
            persona: None,
            backend: Backend::Scripted(policy),
            cache: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn remote(config: RemoteConfig) -> Self {
        Self {
            persona: None,
            backend: Backend::Remote(config),
            cache: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_persona(mut self, profile: PersonaProfile) -> Self {
        self.persona = Some(profile);
        self
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn is_remote(&self) -> bool {
        matches!(self.backend, Backend::Remote(_))
    }

    /// Label for seed derivation and output rows: the persona code, or
    /// "none" for bare agents.
    pub fn persona_label(&self) -> String {
        self.persona
            .as_ref()
            .map(|p| p.code.to_string())
            .unwrap_or_else(|| "none".to_string())
    }

    /// Sends one stateless task query: the persona's role prompt (when
    /// present) as a system message, then the task text.
    pub fn query(&self, task_text: &str, request_seed: u64) -> Result<String, AgentError> {
        let mut messages = Vec::with_capacity(2);
        if let Some(profile) = &self.persona {
            messages.push(ChatMessage::system(render_role_prompt(profile)));
        }
        messages.push(ChatMessage::user(task_text));
        self.complete(&messages, request_seed)
    }

    /// Completes a message list. Remote backends retry transient failures
    /// and consult the response cache when one is attached; scripted
    /// backends are pure functions of (messages, request_seed).
    pub fn complete(&self, messages: &[ChatMessage], request_seed: u64) -> Result<String, AgentError> {
        if messages.is_empty() || messages.iter().any(|m| m.content.is_empty()) {
            return Err(AgentError::InvalidMessages);
        }
        match &self.backend {
            Backend::Scripted(policy) => Ok(policy.respond(messages, request_seed)),
            Backend::Remote(config) => {
                let key = cache::cache_key(&config.model_id, messages, config.temperature, request_seed);
                if let Some(cache) = &self.cache {
                    if let Some(hit) = cache.get(&key)? {
                        return Ok(hit);
                    }
                }
                let text = remote::complete_remote(config, messages, &self.retry)?;
                if let Some(cache) = &self.cache {
                    cache.put(&key, &text, config, request_seed)?;
                }
                Ok(text)
            }
        }
    }
}
