use std::collections::BTreeMap;

use async_trait::async_trait;

use super::{check_messages, BackendError, ChatMessage, LlmBackend, MtBackend, MtRequest, MtResponse, Role};
use crate::pipeline::prompt::{glossary_block_targets, MT_LABEL};
use crate::store::MockRule;

/// Returns the source unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassthroughMt;

#[async_trait]
impl MtBackend for PassthroughMt {
    async fn translate(&self, request: &MtRequest) -> Result<MtResponse, BackendError> {
        Ok(MtResponse {
            translated_text: request.source_text.clone(),
            provider_latency_ms: 0,
        })
    }
}

/// Looks the source up in a canned table; unknown sources come back as
/// `MT: <source>`.
#[derive(Debug, Clone, Default)]
pub struct MockMt {
    table: BTreeMap<String, String>,
}

impl MockMt {
    pub fn new(table: BTreeMap<String, String>) -> Self {
        Self { table }
    }
}

#[async_trait]
impl MtBackend for MockMt {
    async fn translate(&self, request: &MtRequest) -> Result<MtResponse, BackendError> {
        let translated_text = self
            .table
            .get(&request.source_text)
            .cloned()
            .unwrap_or_else(|| format!("{MT_LABEL} {}", request.source_text));
        Ok(MtResponse {
            translated_text,
            provider_latency_ms: 0,
        })
    }
}

/// Echoes the draft found after the last `MT:` line of the last user
/// message, then applies its scripted rules in order.
#[derive(Debug, Clone, Default)]
pub struct MockLlm {
    rules: Vec<MockRule>,
}

impl MockLlm {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self { rules }
    }

    pub fn respond(&self, prompt: &str) -> Result<String, BackendError> {
        let draft = prompt
            .lines()
            .rev()
            .find_map(|line| line.strip_prefix(MT_LABEL))
            .ok_or_else(|| BackendError::InvalidRequest("prompt has no MT: line".into()))?;
        let mut text = draft.trim().to_string();
        let targets = glossary_block_targets(prompt);
        for rule in &self.rules {
            if rule.find.is_empty() {
                continue;
            }
            if rule.requires_glossary && !targets.iter().any(|t| t.contains(&rule.replace)) {
                continue;
            }
            text = text.replace(&rule.find, &rule.replace);
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(text.to_string())
    }
}

#[async_trait]
impl LlmBackend for MockLlm {
    async fn chat(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        check_messages(messages)?;
        let last_user = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .ok_or_else(|| BackendError::InvalidRequest("no user message".into()))?;
        self.respond(&last_user.content)
    }
}
