//! Terminology-aware machine translation post-editing.
//!
//! A source segment is machine translated, glossary entries and
//! translation-memory matches are retrieved for it, and an LLM post-edits
//! the draft with that evidence in its prompt. The result carries the
//! evidence, the exact prompt, and diff spans between draft and final text.

pub mod backends;
pub mod clock;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;
pub mod service;
pub mod store;
pub mod textproc;

pub use backends::{BackendError, BackendProvider, ConfiguredBackends};
pub use pipeline::{Engine, PipelineError, TranslationResult};
pub use store::{EngineConfig, Store, StoreError};
