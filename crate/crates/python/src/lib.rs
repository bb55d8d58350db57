//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists built from the same JSON the HTTP API returns.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;
use tulun_core::metrics::{chrfpp_corpus, chrfpp_sentence, ChrfParams};
use tulun_core::pipeline::diff_spans as core_diff_spans;
use tulun_core::store::{EntryId, GlossaryDraft, ImportKind, PageRequest, StoreError, TmDraft};
use tulun_core::textproc;
use tulun_core::{ConfiguredBackends, PipelineError};

fn store_err(e: StoreError) -> PyErr {
    match e {
        StoreError::Validation(msg) => PyValueError::new_err(msg),
        StoreError::NotFound { .. } => PyKeyError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::EmptySource => PyValueError::new_err(e.to_string()),
        PipelineError::Store(inner) => store_err(inner),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Serializes `value` and hands it to Python's `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value.py().import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_kind(kind: &str) -> PyResult<ImportKind> {
    kind.parse().map_err(|e: String| PyValueError::new_err(e))
}

/// File-backed glossary, translation memory, config and evaluation data.
#[pyclass(name = "Store", frozen)]
struct PyStore {
    inner: Arc<tulun_core::Store>,
}

#[pymethods]
impl PyStore {
    #[new]
    fn new(path: PathBuf) -> PyResult<Self> {
        let inner = tulun_core::Store::open(&path).map_err(store_err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[pyo3(signature = (source_term, target_text, id=None))]
    fn put_glossary_entry<'py>(
        &self,
        py: Python<'py>,
        source_term: &str,
        target_text: &str,
        id: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut draft = GlossaryDraft::new(source_term, target_text);
        draft.id = id.map(EntryId);
        to_py(py, &self.inner.put_glossary_entry(draft).map_err(store_err)?)
    }

    fn delete_glossary_entry(&self, id: u64) -> PyResult<()> {
        self.inner.delete_glossary_entry(EntryId(id)).map_err(store_err)
    }

    #[pyo3(signature = (page=1, page_size=50, query=None))]
    fn list_glossary<'py>(
        &self,
        py: Python<'py>,
        page: usize,
        page_size: usize,
        query: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let entries = self
            .inner
            .list_glossary(PageRequest::new(page, page_size), query)
            .map_err(store_err)?;
        to_py(py, &entries)
    }

    #[pyo3(signature = (source_text, target_text, id=None))]
    fn put_tm_entry<'py>(
        &self,
        py: Python<'py>,
        source_text: &str,
        target_text: &str,
        id: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut draft = TmDraft::new(source_text, target_text);
        draft.id = id.map(EntryId);
        to_py(py, &self.inner.put_tm_entry(draft).map_err(store_err)?)
    }

    fn delete_tm_entry(&self, id: u64) -> PyResult<()> {
        self.inner.delete_tm_entry(EntryId(id)).map_err(store_err)
    }

    #[pyo3(signature = (page=1, page_size=50, query=None))]
    fn list_tm<'py>(
        &self,
        py: Python<'py>,
        page: usize,
        page_size: usize,
        query: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let entries = self
            .inner
            .list_tm(PageRequest::new(page, page_size), query)
            .map_err(store_err)?;
        to_py(py, &entries)
    }

    /// `kind` is "glossary" or "tm"; `data` is the CSV text.
    fn import_csv<'py>(&self, py: Python<'py>, kind: &str, data: &str) -> PyResult<Bound<'py, PyAny>> {
        let report = self
            .inner
            .import_csv(parse_kind(kind)?, data.as_bytes())
            .map_err(store_err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (query, cap=0))]
    fn match_glossary<'py>(&self, py: Python<'py>, query: &str, cap: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.match_glossary(query, cap))
    }

    #[pyo3(signature = (query, n=5))]
    fn retrieve_tm<'py>(&self, py: Python<'py>, query: &str, n: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.retrieve_tm(query, n))
    }

    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.config())
    }

    /// Merge-patches the engine config; keys set to None are reset.
    fn update_config<'py>(&self, py: Python<'py>, patch: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let patch: serde_json::Value = from_py(patch)?;
        to_py(py, &self.inner.update_config(&patch).map_err(store_err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.glossary_len() + self.inner.tm_len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Store({:?}, glossary={}, tm={})",
            self.inner.dir(),
            self.inner.glossary_len(),
            self.inner.tm_len()
        )
    }
}

/// The translate, retrieve, post-edit and diff pipeline over a store.
#[pyclass(name = "Engine", frozen)]
struct PyEngine {
    engine: tulun_core::Engine,
    runtime: tokio::runtime::Runtime,
}

impl PyEngine {
    fn block<F: std::future::Future + Send>(&self, py: Python<'_>, fut: F) -> F::Output
    where
        F::Output: Send,
    {
        py.detach(|| self.runtime.block_on(fut))
    }
}

#[pymethods]
impl PyEngine {
    #[new]
    fn new(store: &PyStore) -> PyResult<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(Self {
            engine: tulun_core::Engine::new(store.inner.clone(), ConfiguredBackends::shared()),
            runtime,
        })
    }

    /// Full pipeline; returns the TranslationResult as a dict.
    fn translate<'py>(&self, py: Python<'py>, source_text: &str) -> PyResult<Bound<'py, PyAny>> {
        let result = self.block(py, self.engine.translate(source_text)).map_err(pipeline_err)?;
        to_py(py, &result)
    }

    fn machine_translate(&self, py: Python<'_>, source_text: &str) -> PyResult<String> {
        let mt = self
            .block(py, self.engine.machine_translate(source_text))
            .map_err(pipeline_err)?;
        Ok(mt.translated_text)
    }

    fn save_to_tm<'py>(
        &self,
        py: Python<'py>,
        source_text: &str,
        post_edited_text: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let entry = tulun_core::pipeline::save_to_tm(self.engine.store(), source_text, post_edited_text)
            .map_err(pipeline_err)?;
        to_py(py, &entry)
    }
}

#[pyfunction]
#[pyo3(signature = (hypothesis, reference, char_order=6, word_order=2, beta=2.0))]
fn chrfpp(hypothesis: &str, reference: &str, char_order: usize, word_order: usize, beta: f64) -> PyResult<f64> {
    let params = checked_params(char_order, word_order, beta)?;
    Ok(chrfpp_sentence(hypothesis, reference, &params))
}

/// Corpus chrF++ from pooled statistics over (hypothesis, reference) pairs.
#[pyfunction]
#[pyo3(signature = (pairs, char_order=6, word_order=2, beta=2.0))]
fn chrfpp_corpus_score(
    pairs: Vec<(String, String)>,
    char_order: usize,
    word_order: usize,
    beta: f64,
) -> PyResult<Option<f64>> {
    let params = checked_params(char_order, word_order, beta)?;
    Ok(chrfpp_corpus(&pairs, &params))
}

fn checked_params(char_order: usize, word_order: usize, beta: f64) -> PyResult<ChrfParams> {
    let params = ChrfParams {
        char_order,
        word_order,
        beta,
    };
    if !params.is_valid() {
        return Err(PyValueError::new_err("char_order must be >= 1 and beta > 0"));
    }
    Ok(params)
}

/// `(surface, normalized, start, end)` per token; offsets are UTF-8 bytes.
#[pyfunction]
fn tokenize(text: &str) -> Vec<(String, String, usize, usize)> {
    textproc::tokenize(text)
        .into_iter()
        .map(|t| (t.surface, t.normalized, t.byte_span.start, t.byte_span.end))
        .collect()
}

#[pyfunction]
fn normalize(text: &str) -> String {
    textproc::normalize(text)
}

/// Changed byte ranges in `before` and in `after`.
#[pyfunction]
fn diff_spans(before: &str, after: &str) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let d = core_diff_spans(before, after);
    let pairs = |spans: Vec<textproc::ByteSpan>| spans.into_iter().map(|s| (s.start, s.end)).collect();
    (pairs(d.before), pairs(d.after))
}

#[pymodule]
fn tulun(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStore>()?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(chrfpp, m)?)?;
    m.add_function(wrap_pyfunction!(chrfpp_corpus_score, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(diff_spans, m)?)?;
    Ok(())
}
