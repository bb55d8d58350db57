#![allow(dead_code)]

pub mod oracle;
pub mod stub;

use std::path::PathBuf;
use std::sync::Arc;

use async_trait::async_trait;
use serde::Deserialize;
use tulun_core::backends::{
    BackendError, BackendProvider, ChatMessage, ConfiguredBackends, LlmBackend, MtBackend, MtRequest,
    MtResponse,
};
use tulun_core::clock::FixedClock;
use tulun_core::store::{
    EngineConfig, GlossaryDraft, LlmBackendConfig, LlmBackendKind, MockRule, MtBackendConfig, MtBackendKind,
    Store, TmDraft,
};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Token surfaces left after cutting `spans` out of `text`.
pub fn residue_tokens(text: &str, spans: &[tulun_core::textproc::ByteSpan]) -> Vec<String> {
    let rest = tulun_core::pipeline::diff::remove_spans(text, spans);
    tulun_core::textproc::tokenize(&rest).into_iter().map(|t| t.surface).collect()
}

pub fn temp_store() -> (tempfile::TempDir, Arc<Store>) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open_with_clock(dir.path(), FixedClock::epoch()).unwrap());
    (dir, store)
}

pub const BURN_SOURCE: &str =
    "Always check burn again a couple of hours after first assessment, unless burn has been dressed.";
pub const BURN_MT: &str =
    "Sempre kontrola tan kanek rua oras hafoin avaliasaun dahuluk, la\u{2019}ós kanek ne\u{2019}ebé hetan tratamentu";

pub fn seed_burn_glossary(store: &Store) {
    for (term, target) in [
        ("burn", "n. keimadura (ahi-haan)"),
        ("check", "vt. kontrola."),
        ("assessment", "n. avaliasaun."),
        ("antibiotic", "n. antibiótiku"),
    ] {
        store.put_glossary_entry(GlossaryDraft::new(term, target)).unwrap();
    }
}

pub const POTABLE_SOURCE: &str = "Is this water potable?";
pub const POTABLE_MT: &str = "?Wota ia i gud blong dring?";

/// Bislama scenario: the TM knows "stret blong dring" and the scripted LLM
/// applies it to the MT draft.
pub fn potable_config() -> EngineConfig {
    EngineConfig {
        target_language_name: "Bislama".into(),
        mt_backend: MtBackendConfig {
            kind: MtBackendKind::Mock,
            mock_translations: [(POTABLE_SOURCE.to_string(), POTABLE_MT.to_string())].into(),
            ..Default::default()
        },
        llm_backend: LlmBackendConfig {
            kind: LlmBackendKind::Mock,
            mock_rules: vec![MockRule {
                find: "gud blong dring".into(),
                replace: "stret blong dring".into(),
                requires_glossary: false,
            }],
            ..Default::default()
        },
        tm_retrieval_count: 3,
        ..Default::default()
    }
}

pub fn seed_potable(store: &Store) {
    store.replace_config(potable_config()).unwrap();
    store.put_glossary_entry(GlossaryDraft::new("water", "wota")).unwrap();
    store
        .put_tm_entry(TmDraft::new("Is the tank water potable?", "?Wota blong tank i stret blong dring?"))
        .unwrap();
    store
        .put_tm_entry(TmDraft::new("Boil the water first.", "Yu mas boelem wota fastaem."))
        .unwrap();
    store.put_tm_entry(TmDraft::new("Where is the clinic?", "Klinik i stap wea?")).unwrap();
}

// ── scripted backends ────────────────────────────────────────────────────

pub struct FailingLlm;

#[async_trait]
impl LlmBackend for FailingLlm {
    async fn chat(&self, _messages: &[ChatMessage]) -> Result<String, BackendError> {
        Err(BackendError::Scripted("llm down".into()))
    }
}

pub struct FailingMt;

#[async_trait]
impl MtBackend for FailingMt {
    async fn translate(&self, _request: &MtRequest) -> Result<MtResponse, BackendError> {
        Err(BackendError::Scripted("mt down".into()))
    }
}

/// Fails MT for sources containing `needle`, otherwise delegates.
pub struct FailMtOn {
    pub needle: String,
    pub inner: Arc<dyn MtBackend>,
}

#[async_trait]
impl MtBackend for FailMtOn {
    async fn translate(&self, request: &MtRequest) -> Result<MtResponse, BackendError> {
        if request.source_text.contains(&self.needle) {
            return Err(BackendError::Scripted(format!("no translation for {}", request.source_text)));
        }
        self.inner.translate(request).await
    }
}

/// Standard provider with optional overrides.
#[derive(Default)]
pub struct Scripted {
    pub mt: Option<Arc<dyn MtBackend>>,
    pub llm: Option<Arc<dyn LlmBackend>>,
    pub fail_mt_on: Option<String>,
}

impl BackendProvider for Scripted {
    fn mt(&self, config: &MtBackendConfig) -> Result<Arc<dyn MtBackend>, BackendError> {
        let inner = match &self.mt {
            Some(mt) => mt.clone(),
            None => ConfiguredBackends::default().mt(config)?,
        };
        Ok(match &self.fail_mt_on {
            Some(needle) => Arc::new(FailMtOn {
                needle: needle.clone(),
                inner,
            }),
            None => inner,
        })
    }

    fn llm(&self, config: &LlmBackendConfig) -> Result<Arc<dyn LlmBackend>, BackendError> {
        match &self.llm {
            Some(llm) => Ok(llm.clone()),
            None => ConfiguredBackends::default().llm(config),
        }
    }
}

// ── directional fixture ──────────────────────────────────────────────────

#[derive(Debug, Deserialize)]
pub struct DirectionalFixture {
    pub source_language_name: String,
    pub target_language_name: String,
    pub glossary: Vec<GlossaryDraft>,
    pub items: Vec<DirectionalItem>,
    pub llm_rules: Vec<MockRule>,
    pub expected: DirectionalExpected,
}

#[derive(Debug, Deserialize)]
pub struct DirectionalItem {
    pub source_text: String,
    pub reference_text: String,
    pub mt_text: String,
    pub expected_ape_text: String,
}

#[derive(Debug, Deserialize)]
pub struct DirectionalExpected {
    pub corpus_chrfpp_mt: f64,
    pub corpus_chrfpp_ape: f64,
}

pub fn directional_fixture() -> DirectionalFixture {
    serde_json::from_str(&read_fixture("directional.json")).unwrap()
}

impl DirectionalFixture {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            source_language_name: self.source_language_name.clone(),
            target_language_name: self.target_language_name.clone(),
            mt_backend: MtBackendConfig {
                kind: MtBackendKind::Mock,
                mock_translations: self
                    .items
                    .iter()
                    .map(|i| (i.source_text.clone(), i.mt_text.clone()))
                    .collect(),
                ..Default::default()
            },
            llm_backend: LlmBackendConfig {
                kind: LlmBackendKind::Mock,
                mock_rules: self.llm_rules.clone(),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn seed(&self, store: &Store) {
        store.replace_config(self.config()).unwrap();
        for g in &self.glossary {
            store.put_glossary_entry(g.clone()).unwrap();
        }
    }

    pub fn dataset_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["source_text", "reference_text"]).unwrap();
        for item in &self.items {
            w.write_record([&item.source_text, &item.reference_text]).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}
