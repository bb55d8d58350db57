use std::future::Future;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{check_messages, BackendError, ChatMessage, LlmBackend, MtBackend, MtRequest, MtResponse};
use crate::store::{LlmBackendConfig, MtBackendConfig};

/// Delays before each retry; its length is the retry budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            backoff: vec![Duration::from_millis(500), Duration::from_secs(2)],
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { backoff: Vec::new() }
    }

    pub async fn run<T, F, Fut>(&self, mut attempt: F) -> Result<T, BackendError>
    where
        F: FnMut() -> Fut,
        Fut: Future<Output = Result<T, BackendError>>,
    {
        let mut delays = self.backoff.iter();
        loop {
            match attempt().await {
                Err(err) if err.is_retryable() => match delays.next() {
                    Some(delay) => {
                        log::warn!("{err}; retrying in {delay:?}");
                        tokio::time::sleep(*delay).await;
                    }
                    None => return Err(err),
                },
                other => return other,
            }
        }
    }
}

fn bearer(env_name: &str) -> Option<String> {
    if env_name.is_empty() {
        return None;
    }
    std::env::var(env_name).ok().filter(|v| !v.is_empty())
}

async fn post_json(
    http: &reqwest::Client,
    endpoint: &str,
    token: Option<&str>,
    timeout: Duration,
    body: &Value,
) -> Result<Value, BackendError> {
    let mut req = http.post(endpoint).timeout(timeout).json(body);
    if let Some(token) = token {
        req = req.bearer_auth(token);
    }
    let classify = |e: reqwest::Error| {
        if e.is_timeout() {
            BackendError::Timeout {
                endpoint: endpoint.to_string(),
                after: timeout,
            }
        } else {
            BackendError::Network {
                endpoint: endpoint.to_string(),
                detail: e.to_string(),
            }
        }
    };
    let resp = req.send().await.map_err(classify)?;
    let status = resp.status();
    let bytes = resp.bytes().await.map_err(classify)?;
    if !status.is_success() {
        return Err(BackendError::Status {
            endpoint: endpoint.to_string(),
            status: status.as_u16(),
            body: String::from_utf8_lossy(&bytes).chars().take(512).collect(),
        });
    }
    serde_json::from_slice(&bytes).map_err(|e| BackendError::Malformed {
        endpoint: endpoint.to_string(),
        detail: e.to_string(),
    })
}

/// Client for the JSON MT contract:
/// `{"text","source","target"}` → `{"translated_text"}`.
#[derive(Debug, Clone)]
pub struct HttpMtClient {
    http: reqwest::Client,
    config: MtBackendConfig,
    retry: RetryPolicy,
}

impl HttpMtClient {
    pub fn new(http: reqwest::Client, config: MtBackendConfig, retry: RetryPolicy) -> Self {
        Self { http, config, retry }
    }
}

#[derive(Deserialize)]
struct MtWireResponse {
    translated_text: String,
}

#[async_trait]
impl MtBackend for HttpMtClient {
    async fn translate(&self, request: &MtRequest) -> Result<MtResponse, BackendError> {
        let endpoint = self
            .config
            .endpoint_url
            .as_deref()
            .ok_or_else(|| BackendError::Config("mt endpoint_url missing".into()))?;
        let mut body = Map::new();
        for (k, v) in &self.config.extra_params {
            body.insert(k.clone(), Value::String(v.clone()));
        }
        body.insert("text".into(), json!(request.source_text));
        body.insert("source".into(), json!(request.source_lang_name));
        body.insert("target".into(), json!(request.target_lang_name));
        let body = Value::Object(body);
        let token = bearer(&self.config.auth_token_env);
        let timeout = Duration::from_secs(self.config.timeout_secs);

        let started = Instant::now();
        let value = self
            .retry
            .run(|| post_json(&self.http, endpoint, token.as_deref(), timeout, &body))
            .await?;
        let wire: MtWireResponse = serde_json::from_value(value).map_err(|e| BackendError::Malformed {
            endpoint: endpoint.to_string(),
            detail: e.to_string(),
        })?;
        Ok(MtResponse {
            translated_text: wire.translated_text,
            provider_latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// Client for the chat-completion contract
/// (`model`, `messages`, `temperature`, `max_tokens` → `choices[0].message.content`).
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    http: reqwest::Client,
    config: LlmBackendConfig,
    retry: RetryPolicy,
}

impl HttpChatClient {
    pub fn new(http: reqwest::Client, config: LlmBackendConfig, retry: RetryPolicy) -> Self {
        Self { http, config, retry }
    }
}

#[derive(Serialize)]
struct ChatWireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatWireResponse {
    choices: Vec<ChatWireChoice>,
}

#[derive(Deserialize)]
struct ChatWireChoice {
    message: ChatWireMessage,
}

#[derive(Deserialize)]
struct ChatWireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[async_trait]
impl LlmBackend for HttpChatClient {
    async fn chat(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        check_messages(messages)?;
        let endpoint = self
            .config
            .endpoint_url
            .as_deref()
            .ok_or_else(|| BackendError::Config("llm endpoint_url missing".into()))?;
        let body = serde_json::to_value(ChatWireRequest {
            model: &self.config.model_id,
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_output_tokens,
        })
        .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
        let token = bearer(&self.config.auth_token_env);
        let timeout = Duration::from_secs(self.config.timeout_secs);

        let value = self
            .retry
            .run(|| post_json(&self.http, endpoint, token.as_deref(), timeout, &body))
            .await?;
        let malformed = |detail: String| BackendError::Malformed {
            endpoint: endpoint.to_string(),
            detail,
        };
        let wire: ChatWireResponse =
            serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        let first = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| malformed("no choices".into()))?;
        let content = first.message.content.unwrap_or_default();
        let content = content.trim();
        if content.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(content.to_string())
    }
}
