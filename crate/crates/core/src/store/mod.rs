//! Durable domain store: glossary, translation memory, engine configuration,
//! evaluation datasets and runs.
//!
//! Directory layout:
//!
//! ```text
//! <dir>/glossary.jsonl
//! <dir>/tm.jsonl
//! <dir>/config.json
//! <dir>/eval/<dataset-id>.jsonl   header record, then one item per line
//! <dir>/runs/<run-id>.json
//! ```
//!
//! Each collection sits behind its own `RwLock` together with its retrieval
//! index, so a mutation (including a whole CSV import) becomes visible to
//! readers in one step and the index never lags the records.

mod import;
mod journal;
mod types;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::clock::{SharedClock, SystemClock};
use crate::retrieval::{glossary, Bm25Params, GlossaryIndex, GlossaryMatch, TmIndex, TmMatch};

pub use import::{ImportKind, ImportReport, ImportWarning, RejectedRow};
use journal::{write_atomic, Journal, Keyed, Op};
pub use types::*;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: EntryId },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record at {}:{line}: {reason}\n  {record}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        record: String,
        reason: String,
    },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl StoreError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }
}

impl Keyed for GlossaryEntry {
    fn key(&self) -> EntryId {
        self.id
    }
}

impl Keyed for TmEntry {
    fn key(&self) -> EntryId {
        self.id
    }
}

fn read<T>(lock: &RwLock<T>) -> RwLockReadGuard<'_, T> {
    lock.read().unwrap_or_else(PoisonError::into_inner)
}

fn write<T>(lock: &RwLock<T>) -> RwLockWriteGuard<'_, T> {
    lock.write().unwrap_or_else(PoisonError::into_inner)
}

fn next_id<T>(map: &BTreeMap<EntryId, T>) -> u64 {
    map.keys().next_back().map_or(1, |id| id.0 + 1)
}

/// One page of results; pages are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRequest {
    pub page: usize,
    pub page_size: usize,
}

impl Default for PageRequest {
    fn default() -> Self {
        Self {
            page: 1,
            page_size: 50,
        }
    }
}

impl PageRequest {
    pub fn new(page: usize, page_size: usize) -> Self {
        Self { page, page_size }
    }

    fn validate(&self) -> Result<(), StoreError> {
        if self.page == 0 || self.page_size == 0 {
            return Err(StoreError::validation("page and page_size must be >= 1"));
        }
        Ok(())
    }

    fn apply<T>(&self, items: Vec<T>) -> Vec<T> {
        let skip = (self.page - 1).saturating_mul(self.page_size);
        items.into_iter().skip(skip).take(self.page_size).collect()
    }
}

fn contains_ci(haystack: &str, needle_lower: &str) -> bool {
    haystack.to_lowercase().contains(needle_lower)
}

struct GlossaryState {
    entries: BTreeMap<EntryId, GlossaryEntry>,
    index: GlossaryIndex,
    journal: Journal,
    next_id: u64,
}

struct TmState {
    entries: BTreeMap<EntryId, TmEntry>,
    index: TmIndex,
    journal: Journal,
    next_id: u64,
}

#[derive(Default)]
struct EvalState {
    datasets: BTreeMap<EntryId, EvalDataset>,
    runs: BTreeMap<EntryId, EvalRun>,
    next_dataset: u64,
    next_run: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    id: EntryId,
    name: String,
    created_at: DateTime<Utc>,
}

pub struct Store {
    dir: PathBuf,
    clock: SharedClock,
    glossary: RwLock<GlossaryState>,
    tm: RwLock<TmState>,
    config: RwLock<EngineConfig>,
    eval: RwLock<EvalState>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.dir).finish_non_exhaustive()
    }
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with_clock(dir, SystemClock::shared())
    }

    pub fn open_with_clock(dir: impl AsRef<Path>, clock: SharedClock) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        for sub in [dir.clone(), dir.join("eval"), dir.join("runs")] {
            fs::create_dir_all(&sub).map_err(|source| StoreError::Io { path: sub, source })?;
        }

        let (journal, entries) = Journal::open::<GlossaryEntry>(&dir.join("glossary.jsonl"))?;
        let glossary = GlossaryState {
            index: GlossaryIndex::build(entries.values()),
            next_id: next_id(&entries),
            entries,
            journal,
        };

        let (journal, entries) = Journal::open::<TmEntry>(&dir.join("tm.jsonl"))?;
        let tm = TmState {
            index: TmIndex::build(entries.values(), Bm25Params::default()),
            next_id: next_id(&entries),
            entries,
            journal,
        };

        let config = load_config(&dir.join("config.json"))?;
        let eval = load_eval(&dir)?;

        Ok(Self {
            dir,
            clock,
            glossary: RwLock::new(glossary),
            tm: RwLock::new(tm),
            config: RwLock::new(config),
            eval: RwLock::new(eval),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn clock(&self) -> &SharedClock {
        &self.clock
    }

    // ── glossary ─────────────────────────────────────────────────────────

    pub fn put_glossary_entry(&self, draft: GlossaryDraft) -> Result<GlossaryEntry, StoreError> {
        draft.validate()?;
        let now = self.clock.now();
        let mut state = write(&self.glossary);
        let entry = glossary_record(&state, draft, now);
        state.journal.append(&[Op::Put(&entry)])?;
        state.next_id = state.next_id.max(entry.id.0 + 1);
        state.index.upsert(&entry);
        state.entries.insert(entry.id, entry.clone());
        let GlossaryState { journal, entries, .. } = &mut *state;
        journal.maybe_compact(entries)?;
        Ok(entry)
    }

    pub fn get_glossary_entry(&self, id: EntryId) -> Option<GlossaryEntry> {
        read(&self.glossary).entries.get(&id).cloned()
    }

    pub fn delete_glossary_entry(&self, id: EntryId) -> Result<(), StoreError> {
        let mut state = write(&self.glossary);
        if !state.entries.contains_key(&id) {
            return Err(StoreError::NotFound {
                kind: "glossary entry",
                id,
            });
        }
        state.journal.append::<GlossaryEntry>(&[Op::Delete(id)])?;
        state.entries.remove(&id);
        state.index.remove(id);
        let GlossaryState { journal, entries, .. } = &mut *state;
        journal.maybe_compact(entries)?;
        Ok(())
    }

    /// Entries ordered by `updated_at` descending, ties by ascending id,
    /// optionally filtered by a case-insensitive substring of either side.
    pub fn list_glossary(
        &self,
        page: PageRequest,
        query: Option<&str>,
    ) -> Result<Vec<GlossaryEntry>, StoreError> {
        page.validate()?;
        let needle = query.map(str::to_lowercase);
        let mut items: Vec<GlossaryEntry> = read(&self.glossary)
            .entries
            .values()
            .filter(|e| {
                needle.as_deref().is_none_or(|n| {
                    contains_ci(&e.source_term, n) || contains_ci(&e.target_text, n)
                })
            })
            .cloned()
            .collect();
        items.sort_by(|a, b| b.updated_at.cmp(&a.updated_at).then(a.id.cmp(&b.id)));
        Ok(page.apply(items))
    }

    pub fn glossary_len(&self) -> usize {
        read(&self.glossary).entries.len()
    }

    pub fn match_glossary(&self, query: &str, cap: usize) -> Vec<GlossaryMatch> {
        let state = read(&self.glossary);
        state.index.find(query, &state.entries, cap)
    }

    // ── translation memory ───────────────────────────────────────────────

    pub fn put_tm_entry(&self, draft: TmDraft) -> Result<TmEntry, StoreError> {
        draft.validate()?;
        let now = self.clock.now();
        let mut state = write(&self.tm);
        let entry = tm_record(&state, draft, now);
        state.journal.append(&[Op::Put(&entry)])?;
        state.next_id = state.next_id.max(entry.id.0 + 1);
        state.index.upsert(&entry);
        state.entries.insert(entry.id, entry.clone());
        let TmState { journal, entries, .. } = &mut *state;
        journal.maybe_compact(entries)?;
        Ok(entry)
    }

    pub fn get_tm_entry(&self, id: EntryId) -> Option<TmEntry> {
        read(&self.tm).entries.get(&id).cloned()
    }

    pub fn delete_tm_entry(&self, id: EntryId) -> Result<(), StoreError> {
        let mut state = write(&self.tm);
        if !state.entries.contains_key(&id) {
            return Err(StoreError::NotFound { kind: "tm entry", id });
        }
        state.journal.append::<TmEntry>(&[Op::Delete(id)])?;
        state.entries.remove(&id);
        state.index.delete(id);
        let TmState { journal, entries, .. } = &mut *state;
        journal.maybe_compact(entries)?;
        Ok(())
    }

    /// Entries ordered by `created_at` descending, ties by ascending id.
    pub fn list_tm(&self, page: PageRequest, query: Option<&str>) -> Result<Vec<TmEntry>, StoreError> {
        page.validate()?;
        let needle = query.map(str::to_lowercase);
        let mut items: Vec<TmEntry> = read(&self.tm)
            .entries
            .values()
            .filter(|e| {
                needle.as_deref().is_none_or(|n| {
                    contains_ci(&e.source_text, n) || contains_ci(&e.target_text, n)
                })
            })
            .cloned()
            .collect();
        items.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(a.id.cmp(&b.id)));
        Ok(page.apply(items))
    }

    pub fn tm_len(&self) -> usize {
        read(&self.tm).entries.len()
    }

    pub fn retrieve_tm(&self, query: &str, n: usize) -> Vec<TmMatch> {
        let state = read(&self.tm);
        crate::retrieval::retrieve_tm(&state.index, &state.entries, query, n)
    }

    // ── bulk import ──────────────────────────────────────────────────────

    /// Inserts every valid row in a single atomic step and reports the rest.
    pub fn import_csv(&self, kind: ImportKind, bytes: &[u8]) -> Result<ImportReport, StoreError> {
        let (rows, mut rejected) = import::parse_pairs(bytes, kind.columns())?;
        let now = self.clock.now();
        let mut report = ImportReport::default();

        match kind {
            ImportKind::Glossary => {
                let mut state = write(&self.glossary);
                let mut fresh = Vec::new();
                for row in rows {
                    let draft = GlossaryDraft::new(row.first, row.second);
                    if let Err(e) = draft.validate() {
                        rejected.push(RejectedRow {
                            line: row.line,
                            row: row.row,
                            reason: reason_of(e),
                        });
                        continue;
                    }
                    if !glossary::is_reachable(&draft.source_term) {
                        report.warnings.push(ImportWarning {
                            line: row.line,
                            row: row.row,
                            message: format!(
                                "source_term `{}` is unreachable by matcher (not 1 or 2 tokens)",
                                draft.source_term
                            ),
                        });
                    }
                    let id = EntryId(state.next_id + fresh.len() as u64);
                    fresh.push(GlossaryEntry {
                        id,
                        source_term: draft.source_term,
                        target_text: draft.target_text,
                        created_at: now,
                        updated_at: now,
                    });
                }
                let ops: Vec<_> = fresh.iter().map(Op::Put).collect();
                state.journal.append(&ops)?;
                state.next_id += fresh.len() as u64;
                report.inserted = fresh.len();
                for entry in fresh {
                    state.index.upsert(&entry);
                    state.entries.insert(entry.id, entry);
                }
            }
            ImportKind::Tm => {
                let mut state = write(&self.tm);
                let mut fresh = Vec::new();
                for row in rows {
                    let draft = TmDraft::new(row.first, row.second);
                    if let Err(e) = draft.validate() {
                        rejected.push(RejectedRow {
                            line: row.line,
                            row: row.row,
                            reason: reason_of(e),
                        });
                        continue;
                    }
                    let id = EntryId(state.next_id + fresh.len() as u64);
                    fresh.push(TmEntry {
                        id,
                        source_text: draft.source_text,
                        target_text: draft.target_text,
                        origin: TmOrigin::Imported,
                        created_at: now,
                    });
                }
                let ops: Vec<_> = fresh.iter().map(Op::Put).collect();
                state.journal.append(&ops)?;
                state.next_id += fresh.len() as u64;
                report.inserted = fresh.len();
                for entry in fresh {
                    state.index.upsert(&entry);
                    state.entries.insert(entry.id, entry);
                }
            }
        }
        rejected.sort_by_key(|r| r.row);
        report.rejected = rejected;
        Ok(report)
    }

    // ── configuration ────────────────────────────────────────────────────

    pub fn config(&self) -> EngineConfig {
        read(&self.config).clone()
    }

    /// Applies a JSON merge patch (objects merge recursively, `null`
    /// resets a field to its default) and persists the result.
    pub fn update_config(&self, patch: &serde_json::Value) -> Result<EngineConfig, StoreError> {
        let mut current = write(&self.config);
        let mut value = serde_json::to_value(&*current)?;
        merge_patch(&mut value, patch);
        let next: EngineConfig = serde_json::from_value(value)
            .map_err(|e| StoreError::validation(format!("invalid config: {e}")))?;
        next.validate()?;
        write_atomic(&self.dir.join("config.json"), &serde_json::to_vec_pretty(&next)?)?;
        *current = next.clone();
        Ok(next)
    }

    pub fn replace_config(&self, config: EngineConfig) -> Result<EngineConfig, StoreError> {
        config.validate()?;
        let mut current = write(&self.config);
        write_atomic(&self.dir.join("config.json"), &serde_json::to_vec_pretty(&config)?)?;
        *current = config.clone();
        Ok(config)
    }

    // ── evaluation datasets and runs ─────────────────────────────────────

    /// Creates a dataset from a `source_text,reference_text` CSV. Valid rows
    /// become items indexed contiguously from 0; the rest are reported.
    pub fn create_dataset(
        &self,
        name: &str,
        csv_bytes: &[u8],
    ) -> Result<(EvalDataset, ImportReport), StoreError> {
        if name.trim().is_empty() {
            return Err(StoreError::validation("dataset name must not be empty"));
        }
        let (rows, mut rejected) =
            import::parse_pairs(csv_bytes, ["source_text", "reference_text"])?;
        let mut items = Vec::new();
        for row in rows {
            if row.first.trim().is_empty() || row.second.trim().is_empty() {
                let which = if row.first.trim().is_empty() {
                    "empty source_text"
                } else {
                    "empty reference_text"
                };
                rejected.push(RejectedRow {
                    line: row.line,
                    row: row.row,
                    reason: which.into(),
                });
                continue;
            }
            items.push(EvalItem {
                index: items.len(),
                source_text: row.first,
                reference_text: row.second,
            });
        }
        if items.is_empty() {
            return Err(StoreError::validation("dataset has no valid items"));
        }
        rejected.sort_by_key(|r| r.row);

        let mut state = write(&self.eval);
        let dataset = EvalDataset {
            id: EntryId(state.next_dataset),
            name: name.to_string(),
            created_at: self.clock.now(),
            items,
        };
        let mut buf = serde_json::to_vec(&DatasetHeader {
            id: dataset.id,
            name: dataset.name.clone(),
            created_at: dataset.created_at,
        })?;
        buf.push(b'\n');
        for item in &dataset.items {
            serde_json::to_writer(&mut buf, item)?;
            buf.push(b'\n');
        }
        write_atomic(&self.dir.join("eval").join(format!("{}.jsonl", dataset.id)), &buf)?;
        state.next_dataset += 1;
        state.datasets.insert(dataset.id, dataset.clone());
        let report = ImportReport {
            inserted: dataset.items.len(),
            rejected,
            warnings: Vec::new(),
        };
        Ok((dataset, report))
    }

    /// Datasets in creation order.
    pub fn datasets(&self) -> Vec<EvalDataset> {
        read(&self.eval).datasets.values().cloned().collect()
    }

    pub fn dataset_summaries(&self) -> Vec<EvalDatasetSummary> {
        read(&self.eval)
            .datasets
            .values()
            .map(|d| EvalDatasetSummary {
                id: d.id,
                name: d.name.clone(),
                created_at: d.created_at,
                item_count: d.items.len(),
            })
            .collect()
    }

    pub fn dataset(&self, id: EntryId) -> Option<EvalDataset> {
        read(&self.eval).datasets.get(&id).cloned()
    }

    /// Reserves a fresh run id.
    pub fn allocate_run_id(&self) -> EntryId {
        let mut state = write(&self.eval);
        let id = EntryId(state.next_run);
        state.next_run += 1;
        id
    }

    pub fn save_run(&self, run: &EvalRun) -> Result<(), StoreError> {
        let mut state = write(&self.eval);
        write_atomic(
            &self.dir.join("runs").join(format!("{}.json", run.id)),
            &serde_json::to_vec_pretty(run)?,
        )?;
        state.next_run = state.next_run.max(run.id.0 + 1);
        state.runs.insert(run.id, run.clone());
        Ok(())
    }

    pub fn run(&self, id: EntryId) -> Option<EvalRun> {
        read(&self.eval).runs.get(&id).cloned()
    }

    pub fn runs(&self) -> Vec<EvalRun> {
        read(&self.eval).runs.values().cloned().collect()
    }
}

fn reason_of(err: StoreError) -> String {
    match err {
        StoreError::Validation(msg) => msg,
        other => other.to_string(),
    }
}

fn glossary_record(state: &GlossaryState, draft: GlossaryDraft, now: DateTime<Utc>) -> GlossaryEntry {
    let id = draft.id.unwrap_or(EntryId(state.next_id));
    let created_at = state.entries.get(&id).map_or(now, |old| old.created_at);
    GlossaryEntry {
        id,
        source_term: draft.source_term,
        target_text: draft.target_text,
        created_at,
        updated_at: now,
    }
}

fn tm_record(state: &TmState, draft: TmDraft, now: DateTime<Utc>) -> TmEntry {
    let id = draft.id.unwrap_or(EntryId(state.next_id));
    let created_at = state.entries.get(&id).map_or(now, |old| old.created_at);
    TmEntry {
        id,
        source_text: draft.source_text,
        target_text: draft.target_text,
        origin: draft.origin,
        created_at,
    }
}

fn merge_patch(target: &mut serde_json::Value, patch: &serde_json::Value) {
    use serde_json::Value;
    match (target, patch) {
        (Value::Object(dst), Value::Object(src)) => {
            for (key, value) in src {
                if value.is_null() {
                    dst.remove(key);
                } else {
                    merge_patch(dst.entry(key.clone()).or_insert(Value::Null), value);
                }
            }
        }
        (dst, src) => *dst = src.clone(),
    }
}

fn load_config(path: &Path) -> Result<EngineConfig, StoreError> {
    if !path.exists() {
        let config = EngineConfig::default();
        write_atomic(path, &serde_json::to_vec_pretty(&config)?)?;
        return Ok(config);
    }
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let corrupt = |reason: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        line: 1,
        record: String::from_utf8_lossy(&bytes).into_owned(),
        reason,
    };
    let config: EngineConfig = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
    config.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(config)
}

fn load_eval(dir: &Path) -> Result<EvalState, StoreError> {
    let mut state = EvalState {
        next_dataset: 1,
        next_run: 1,
        ..Default::default()
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StoreError::Io { path, source }
    };

    let eval_dir = dir.join("eval");
    for item in fs::read_dir(&eval_dir).map_err(io(&eval_dir))? {
        let path = item.map_err(io(&eval_dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let dataset = parse_dataset(&path, &text)?;
        state.next_dataset = state.next_dataset.max(dataset.id.0 + 1);
        state.datasets.insert(dataset.id, dataset);
    }

    let runs_dir = dir.join("runs");
    for item in fs::read_dir(&runs_dir).map_err(io(&runs_dir))? {
        let path = item.map_err(io(&runs_dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let run: EvalRun = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            line: 1,
            record: text.clone(),
            reason: e.to_string(),
        })?;
        state.next_run = state.next_run.max(run.id.0 + 1);
        state.runs.insert(run.id, run);
    }
    Ok(state)
}

fn parse_dataset(path: &Path, text: &str) -> Result<EvalDataset, StoreError> {
    let corrupt = |line: usize, record: &str, reason: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        line,
        record: record.to_string(),
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| corrupt(1, "", "empty dataset file".into()))?;
    let header: DatasetHeader =
        serde_json::from_str(first).map_err(|e| corrupt(1, first, e.to_string()))?;
    let mut items = Vec::new();
    for (i, line) in lines {
        let item: EvalItem = serde_json::from_str(line).map_err(|e| corrupt(i + 1, line, e.to_string()))?;
        if item.index != items.len() {
            return Err(corrupt(i + 1, line, format!("expected index {}", items.len())));
        }
        items.push(item);
    }
    Ok(EvalDataset {
        id: header.id,
        name: header.name,
        created_at: header.created_at,
        items,
    })
}
