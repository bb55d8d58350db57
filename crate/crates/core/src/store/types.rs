use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::pipeline::prompt::DEFAULT_SYSTEM_PROMPT;

/// Identifier of a stored record. Assigned sequentially per collection, so
/// "smaller id" also means "created earlier" unless the caller chose the id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryId(pub u64);

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for EntryId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(EntryId)
    }
}

fn is_blank(s: &str) -> bool {
    s.trim().is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub id: EntryId,
    pub source_term: String,
    pub target_text: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// Input to a glossary upsert. Without an id a fresh one is assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryDraft {
    #[serde(default)]
    pub id: Option<EntryId>,
    pub source_term: String,
    pub target_text: String,
}

impl GlossaryDraft {
    pub fn new(source_term: impl Into<String>, target_text: impl Into<String>) -> Self {
        Self {
            id: None,
            source_term: source_term.into(),
            target_text: target_text.into(),
        }
    }

    pub fn with_id(mut self, id: EntryId) -> Self {
        self.id = Some(id);
        self
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if is_blank(&self.source_term) {
            return Err(StoreError::validation("empty source_term"));
        }
        if is_blank(&self.target_text) {
            return Err(StoreError::validation("empty target_text"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TmOrigin {
    #[default]
    Imported,
    SavedFromTranslation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TmEntry {
    pub id: EntryId,
    pub source_text: String,
    pub target_text: String,
    pub origin: TmOrigin,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TmDraft {
    #[serde(default)]
    pub id: Option<EntryId>,
    pub source_text: String,
    pub target_text: String,
    #[serde(default)]
    pub origin: TmOrigin,
}

impl TmDraft {
    pub fn new(source_text: impl Into<String>, target_text: impl Into<String>) -> Self {
        Self {
            id: None,
            source_text: source_text.into(),
            target_text: target_text.into(),
            origin: TmOrigin::Imported,
        }
    }

    pub fn with_id(mut self, id: EntryId) -> Self {
        self.id = Some(id);
        self
    }

    pub fn with_origin(mut self, origin: TmOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if is_blank(&self.source_text) {
            return Err(StoreError::validation("empty source_text"));
        }
        if is_blank(&self.target_text) {
            return Err(StoreError::validation("empty target_text"));
        }
        Ok(())
    }
}

// ── configuration ────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub site_title: String,
    pub source_language_name: String,
    pub target_language_name: String,
    pub mt_backend: MtBackendConfig,
    pub llm_backend: LlmBackendConfig,
    /// Number of translation-memory matches injected into the prompt.
    pub tm_retrieval_count: usize,
    /// Maximum glossary matches injected; 0 means no cap.
    pub glossary_injection_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            site_title: "Tulun".into(),
            source_language_name: "English".into(),
            target_language_name: "Tetun".into(),
            mt_backend: MtBackendConfig::default(),
            llm_backend: LlmBackendConfig::default(),
            tm_retrieval_count: 5,
            glossary_injection_cap: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        if is_blank(&self.target_language_name) {
            return Err(StoreError::validation("target_language_name must not be empty"));
        }
        self.mt_backend.validate()?;
        self.llm_backend.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MtBackendKind {
    HttpRemote,
    Mock,
    #[default]
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MtBackendConfig {
    pub kind: MtBackendKind,
    pub endpoint_url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env: String,
    /// Extra string fields merged into the outbound request body.
    pub extra_params: BTreeMap<String, String>,
    pub timeout_secs: u64,
    /// Canned source -> translation pairs for the mock backend.
    pub mock_translations: BTreeMap<String, String>,
}

impl Default for MtBackendConfig {
    fn default() -> Self {
        Self {
            kind: MtBackendKind::default(),
            endpoint_url: None,
            auth_token_env: "TULUN_MT_TOKEN".into(),
            extra_params: BTreeMap::new(),
            timeout_secs: 30,
            mock_translations: BTreeMap::new(),
        }
    }
}

impl MtBackendConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        let has_url = self.endpoint_url.as_deref().is_some_and(|u| !is_blank(u));
        match (self.kind, has_url) {
            (MtBackendKind::HttpRemote, false) => Err(StoreError::validation(
                "mt_backend.endpoint_url is required for http_remote",
            )),
            (MtBackendKind::Mock | MtBackendKind::Passthrough, true) => Err(StoreError::validation(
                "mt_backend.endpoint_url is only allowed for http_remote",
            )),
            _ if self.timeout_secs == 0 => {
                Err(StoreError::validation("mt_backend.timeout_secs must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LlmBackendKind {
    ChatHttp,
    #[default]
    Mock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub user: String,
    pub assistant: String,
}

/// Scripted edit applied by the mock LLM to the draft it echoes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub find: String,
    pub replace: String,
    /// Only fire when `replace` appears as a target in the prompt's
    /// glossary block.
    #[serde(default)]
    pub requires_glossary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmBackendConfig {
    pub kind: LlmBackendKind,
    pub endpoint_url: Option<String>,
    pub model_id: String,
    pub auth_token_env: String,
    pub system_prompt: String,
    pub few_shot_examples: Vec<FewShotExample>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub mock_rules: Vec<MockRule>,
}

impl Default for LlmBackendConfig {
    fn default() -> Self {
        Self {
            kind: LlmBackendKind::default(),
            endpoint_url: None,
            model_id: String::new(),
            auth_token_env: "TULUN_LLM_TOKEN".into(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.into(),
            few_shot_examples: Vec::new(),
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout_secs: 30,
            mock_rules: Vec::new(),
        }
    }
}

impl LlmBackendConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(StoreError::validation("llm_backend.temperature must be >= 0"));
        }
        if self.max_output_tokens == 0 {
            return Err(StoreError::validation("llm_backend.max_output_tokens must be positive"));
        }
        if self.timeout_secs == 0 {
            return Err(StoreError::validation("llm_backend.timeout_secs must be positive"));
        }
        if self.kind == LlmBackendKind::ChatHttp {
            if is_blank(&self.system_prompt) {
                return Err(StoreError::validation(
                    "llm_backend.system_prompt must not be empty for chat_http",
                ));
            }
            if self.endpoint_url.as_deref().is_none_or(is_blank) {
                return Err(StoreError::validation(
                    "llm_backend.endpoint_url is required for chat_http",
                ));
            }
        }
        Ok(())
    }
}

// ── evaluation ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub index: usize,
    pub source_text: String,
    pub reference_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalDataset {
    pub id: EntryId,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub items: Vec<EvalItem>,
}

/// Dataset listing row without its items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalDatasetSummary {
    pub id: EntryId,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub item_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub source_text: String,
    pub reference_text: String,
    pub mt_output: Option<String>,
    pub post_edited_output: Option<String>,
    pub chrfpp_mt: Option<f64>,
    pub chrfpp_ape: Option<f64>,
    /// Set when a backend failed for this item; such items are excluded
    /// from corpus scores.
    pub error: Option<String>,
}

impl ItemResult {
    pub fn is_scored(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub id: EntryId,
    pub dataset_id: EntryId,
    pub status: RunStatus,
    pub per_item: Vec<ItemResult>,
    pub corpus_chrfpp_mt: Option<f64>,
    pub corpus_chrfpp_ape: Option<f64>,
    pub scored_items: usize,
    pub failed_items: usize,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub error: Option<String>,
}
