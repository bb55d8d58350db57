//! Machine-translation and LLM chat backends.
//!
//! Both steps sit behind object-safe traits so the pipeline can run against
//! a remote HTTP provider, a deterministic mock, or a test double. A
//! [`BackendProvider`] turns the current [`EngineConfig`](crate::store::EngineConfig)
//! sections into clients on every call, so configuration edits take effect
//! on the next request.

mod http;
mod mock;

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::store::{LlmBackendConfig, LlmBackendKind, MtBackendConfig, MtBackendKind};

pub use http::{HttpChatClient, HttpMtClient, RetryPolicy};
pub use mock::{MockLlm, MockMt, PassthroughMt};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtRequest {
    pub source_text: String,
    pub source_lang_name: String,
    pub target_lang_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtResponse {
    pub translated_text: String,
    pub provider_latency_ms: u64,
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

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("request to {endpoint} failed: {detail}")]
    Network { endpoint: String, detail: String },
    #[error("{endpoint} returned HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("malformed response from {endpoint}: {detail}")]
    Malformed { endpoint: String, detail: String },
    #[error("request to {endpoint} timed out after {after:?}")]
    Timeout { endpoint: String, after: Duration },
    #[error("completion was empty")]
    EmptyCompletion,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
    /// Failure injected by a scripted test double.
    #[error("scripted failure: {0}")]
    Scripted(String),
}

impl BackendError {
    /// Timeouts and 5xx responses are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Timeout { .. } => true,
            BackendError::Status { status, .. } => (500..600).contains(status),
            _ => false,
        }
    }
}

#[async_trait]
pub trait MtBackend: Send + Sync {
    async fn translate(&self, request: &MtRequest) -> Result<MtResponse, BackendError>;
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    /// Returns the completion text, trimmed.
    async fn chat(&self, messages: &[ChatMessage]) -> Result<String, BackendError>;
}

/// Builds backend clients from configuration.
pub trait BackendProvider: Send + Sync {
    fn mt(&self, config: &MtBackendConfig) -> Result<Arc<dyn MtBackend>, BackendError>;
    fn llm(&self, config: &LlmBackendConfig) -> Result<Arc<dyn LlmBackend>, BackendError>;
}

/// Standard provider: HTTP clients for remote kinds, built-in mocks
/// otherwise. Holds one shared connection pool.
#[derive(Debug, Clone)]
pub struct ConfiguredBackends {
    http: reqwest::Client,
    retry: RetryPolicy,
}

impl Default for ConfiguredBackends {
    fn default() -> Self {
        Self::new(RetryPolicy::default())
    }
}

impl ConfiguredBackends {
    pub fn new(retry: RetryPolicy) -> Self {
        Self {
            http: reqwest::Client::new(),
            retry,
        }
    }

    pub fn shared() -> Arc<dyn BackendProvider> {
        Arc::new(Self::default())
    }
}

impl BackendProvider for ConfiguredBackends {
    fn mt(&self, config: &MtBackendConfig) -> Result<Arc<dyn MtBackend>, BackendError> {
        config
            .validate()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(match config.kind {
            MtBackendKind::HttpRemote => Arc::new(HttpMtClient::new(
                self.http.clone(),
                config.clone(),
                self.retry.clone(),
            )),
            MtBackendKind::Mock => Arc::new(MockMt::new(config.mock_translations.clone())),
            MtBackendKind::Passthrough => Arc::new(PassthroughMt),
        })
    }

    fn llm(&self, config: &LlmBackendConfig) -> Result<Arc<dyn LlmBackend>, BackendError> {
        config
            .validate()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(match config.kind {
            LlmBackendKind::ChatHttp => Arc::new(HttpChatClient::new(
                self.http.clone(),
                config.clone(),
                self.retry.clone(),
            )),
            LlmBackendKind::Mock => Arc::new(MockLlm::new(config.mock_rules.clone())),
        })
    }
}

/// One-shot MT call through the standard provider.
pub async fn mt_translate(
    config: &MtBackendConfig,
    request: &MtRequest,
) -> Result<MtResponse, BackendError> {
    ConfiguredBackends::default().mt(config)?.translate(request).await
}

/// One-shot chat call through the standard provider.
pub async fn llm_chat(
    config: &LlmBackendConfig,
    messages: &[ChatMessage],
) -> Result<String, BackendError> {
    ConfiguredBackends::default().llm(config)?.chat(messages).await
}

pub(crate) fn check_messages(messages: &[ChatMessage]) -> Result<(), BackendError> {
    if messages.is_empty() {
        return Err(BackendError::InvalidRequest("no messages".into()));
    }
    if let Some(i) = messages.iter().position(|m| m.content.trim().is_empty()) {
        return Err(BackendError::InvalidRequest(format!("message {i} has empty content")));
    }
    if messages[1..].iter().any(|m| m.role == Role::System) {
        return Err(BackendError::InvalidRequest(
            "only the first message may be a system message".into(),
        ));
    }
    Ok(())
}
