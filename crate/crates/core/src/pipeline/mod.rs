//! The translate → retrieve → prompt → post-edit → diff loop.

pub mod diff;
pub mod prompt;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, BackendProvider, ChatMessage, MtRequest, MtResponse};
use crate::retrieval::{GlossaryMatch, TmMatch};
use crate::store::{EngineConfig, Store, StoreError, TmDraft, TmEntry, TmOrigin};
use crate::textproc::ByteSpan;

pub use diff::{diff_spans, DiffSpans};
pub use prompt::{build_prompt, PromptBundle};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("source text is empty")]
    EmptySource,
    #[error("machine translation failed: {0}")]
    Mt(#[source] BackendError),
    #[error("post-editing failed: {0}")]
    Llm(#[source] BackendError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Per-stage wall time in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub mt_us: u64,
    pub retrieval_us: u64,
    pub llm_us: u64,
    pub diff_us: u64,
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub source_text: String,
    pub mt_text: String,
    pub post_edited_text: String,
    pub glossary_matches: Vec<GlossaryMatch>,
    pub tm_matches: Vec<TmMatch>,
    /// Removed/changed content in `mt_text`.
    pub mt_diff_spans: Vec<ByteSpan>,
    /// Added/changed content in `post_edited_text`.
    pub ape_diff_spans: Vec<ByteSpan>,
    /// Messages exactly as sent to the LLM.
    pub prompt_transcript: Vec<ChatMessage>,
    pub timings: StageTimings,
    /// Post-editing failed and `post_edited_text` is the MT draft.
    pub degraded: bool,
    pub llm_error: Option<String>,
}

fn micros(d: Duration) -> u64 {
    d.as_micros().min(u128::from(u64::MAX)) as u64
}

/// Pipeline bound to a store and a backend provider. Cheap to clone and
/// safe to share between concurrent requests.
#[derive(Clone)]
pub struct Engine {
    store: Arc<Store>,
    backends: Arc<dyn BackendProvider>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("store", &self.store).finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(store: Arc<Store>, backends: Arc<dyn BackendProvider>) -> Self {
        Self { store, backends }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn backends(&self) -> &Arc<dyn BackendProvider> {
        &self.backends
    }

    /// MT step only.
    pub async fn machine_translate(&self, source_text: &str) -> Result<MtResponse, PipelineError> {
        if source_text.trim().is_empty() {
            return Err(PipelineError::EmptySource);
        }
        let config = self.store.config();
        mt_step(&config, self.backends.as_ref(), source_text).await
    }

    /// Full pipeline against the current configuration.
    pub async fn translate(&self, source_text: &str) -> Result<TranslationResult, PipelineError> {
        let config = self.store.config();
        translate(source_text, &self.store, &config, self.backends.as_ref()).await
    }

    pub fn save_to_tm(&self, result: &TranslationResult) -> Result<TmEntry, PipelineError> {
        save_to_tm(&self.store, &result.source_text, &result.post_edited_text)
    }
}

async fn mt_step(
    config: &EngineConfig,
    backends: &dyn BackendProvider,
    source_text: &str,
) -> Result<MtResponse, PipelineError> {
    let request = MtRequest {
        source_text: source_text.to_string(),
        source_lang_name: config.source_language_name.clone(),
        target_lang_name: config.target_language_name.clone(),
    };
    let mt = backends.mt(&config.mt_backend).map_err(PipelineError::Mt)?;
    mt.translate(&request).await.map_err(PipelineError::Mt)
}

/// Runs the whole loop. An MT failure aborts before any LLM call; an LLM
/// failure returns the MT draft as the final text with `degraded` set.
pub async fn translate(
    source_text: &str,
    store: &Store,
    config: &EngineConfig,
    backends: &dyn BackendProvider,
) -> Result<TranslationResult, PipelineError> {
    if source_text.trim().is_empty() {
        return Err(PipelineError::EmptySource);
    }
    let clock = store.clock();
    let t0 = clock.monotonic();

    let mt_text = mt_step(config, backends, source_text).await?.translated_text;
    let t1 = clock.monotonic();

    let glossary_matches = store.match_glossary(source_text, config.glossary_injection_cap);
    let tm_matches = store.retrieve_tm(source_text, config.tm_retrieval_count);
    let t2 = clock.monotonic();

    let bundle = build_prompt(config, source_text, &mt_text, &glossary_matches, &tm_matches);
    let messages = bundle.messages();
    let outcome = match backends.llm(&config.llm_backend) {
        Ok(llm) => llm.chat(&messages).await,
        Err(e) => Err(e),
    };
    let t3 = clock.monotonic();

    let (post_edited_text, degraded, llm_error) = match outcome {
        Ok(text) => (text, false, None),
        Err(e) => {
            log::warn!("post-editing failed, returning MT draft: {e}");
            (mt_text.clone(), true, Some(e.to_string()))
        }
    };

    let spans = diff_spans(&mt_text, &post_edited_text);
    let t4 = clock.monotonic();

    Ok(TranslationResult {
        source_text: source_text.to_string(),
        mt_text,
        post_edited_text,
        glossary_matches,
        tm_matches,
        mt_diff_spans: spans.before,
        ape_diff_spans: spans.after,
        prompt_transcript: messages,
        timings: StageTimings {
            mt_us: micros(t1 - t0),
            retrieval_us: micros(t2 - t1),
            llm_us: micros(t3 - t2),
            diff_us: micros(t4 - t3),
            total_us: micros(t4 - t0),
        },
        degraded,
        llm_error,
    })
}

/// Stores the (source, final translation) pair as a new TM entry. Repeated
/// saves create repeated entries.
pub fn save_to_tm(store: &Store, source_text: &str, post_edited_text: &str) -> Result<TmEntry, PipelineError> {
    if post_edited_text.trim().is_empty() {
        return Err(StoreError::validation("post-edited text is empty").into());
    }
    if source_text.trim().is_empty() {
        return Err(PipelineError::EmptySource);
    }
    let draft = TmDraft::new(source_text, post_edited_text).with_origin(TmOrigin::SavedFromTranslation);
    Ok(store.put_tm_entry(draft)?)
}
