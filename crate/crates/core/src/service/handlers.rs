use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};

use super::{ApiError, AppState};
use crate::metrics::{self, lookup_reference, ReferenceMatch};
use crate::pipeline::{self, TranslationResult};
use crate::store::{
    EngineConfig, EntryId, EvalDatasetSummary, EvalRun, GlossaryDraft, GlossaryEntry, ImportKind,
    ImportReport, PageRequest, RunStatus, TmDraft, TmEntry,
};

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub(super) struct Json<T>(pub T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
pub(super) struct Path<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub(super) struct Query<T>(pub T);

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    #[serde(flatten)]
    pub result: TranslationResult,
    /// Human reference when the source is an evaluation item.
    pub reference: Option<ReferenceMatch>,
}

pub(super) async fn translate(
    State(state): State<AppState>,
    Json(req): Json<TranslateRequest>,
) -> ApiResult<TranslateResponse> {
    let result = state.engine.translate(&req.source_text).await?;
    let reference = lookup_reference(&req.source_text, &state.store().datasets());
    Ok(Json(TranslateResponse { result, reference }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaveTmRequest {
    pub source_text: String,
    pub target_text: String,
}

pub(super) async fn save_tm(
    State(state): State<AppState>,
    Json(req): Json<SaveTmRequest>,
) -> Result<(StatusCode, Json<TmEntry>), ApiError> {
    let entry = pipeline::save_to_tm(state.store(), &req.source_text, &req.target_text)?;
    Ok((StatusCode::CREATED, Json(entry)))
}

#[derive(Debug, Deserialize)]
pub(super) struct ListParams {
    page: Option<usize>,
    page_size: Option<usize>,
    q: Option<String>,
}

impl ListParams {
    fn page(&self) -> PageRequest {
        let d = PageRequest::default();
        PageRequest::new(self.page.unwrap_or(d.page), self.page_size.unwrap_or(d.page_size))
    }

    fn query(&self) -> Option<&str> {
        self.q.as_deref().filter(|q| !q.is_empty())
    }
}

// ── glossary ─────────────────────────────────────────────────────────────

pub(super) async fn list_glossary(
    State(state): State<AppState>,
    Query(params): Query<ListParams>,
) -> ApiResult<Vec<GlossaryEntry>> {
    Ok(Json(state.store().list_glossary(params.page(), params.query())?))
}

pub(super) async fn put_glossary(
    State(state): State<AppState>,
    Json(draft): Json<GlossaryDraft>,
) -> ApiResult<GlossaryEntry> {
    Ok(Json(state.store().put_glossary_entry(draft)?))
}

pub(super) async fn get_glossary(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> ApiResult<GlossaryEntry> {
    state
        .store()
        .get_glossary_entry(EntryId(id))
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("glossary entry {id} not found")))
}

pub(super) async fn delete_glossary(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<StatusCode, ApiError> {
    state.store().delete_glossary_entry(EntryId(id))?;
    Ok(StatusCode::NO_CONTENT)
}

pub(super) async fn import_glossary(State(state): State<AppState>, body: Bytes) -> ApiResult<ImportReport> {
    Ok(Json(state.store().import_csv(ImportKind::Glossary, &body)?))
}

// ── translation memory ───────────────────────────────────────────────────

pub(super) async fn list_tm(
    State(state): State<AppState>,
    Query(params): Query<ListParams>,
) -> ApiResult<Vec<TmEntry>> {
    Ok(Json(state.store().list_tm(params.page(), params.query())?))
}

pub(super) async fn put_tm(State(state): State<AppState>, Json(draft): Json<TmDraft>) -> ApiResult<TmEntry> {
    Ok(Json(state.store().put_tm_entry(draft)?))
}

pub(super) async fn get_tm(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<TmEntry> {
    state
        .store()
        .get_tm_entry(EntryId(id))
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("tm entry {id} not found")))
}

pub(super) async fn delete_tm(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<StatusCode, ApiError> {
    state.store().delete_tm_entry(EntryId(id))?;
    Ok(StatusCode::NO_CONTENT)
}

pub(super) async fn import_tm(State(state): State<AppState>, body: Bytes) -> ApiResult<ImportReport> {
    Ok(Json(state.store().import_csv(ImportKind::Tm, &body)?))
}

// ── configuration ────────────────────────────────────────────────────────

// The stored config only ever names credential environment variables, so
// the GET body cannot carry a secret value.
pub(super) async fn get_config(State(state): State<AppState>) -> Json<EngineConfig> {
    Json(state.store().config())
}

pub(super) async fn put_config(
    State(state): State<AppState>,
    Json(patch): Json<serde_json::Value>,
) -> ApiResult<EngineConfig> {
    if !patch.is_object() {
        return Err(ApiError::validation("config patch must be a JSON object"));
    }
    Ok(Json(state.store().update_config(&patch)?))
}

// ── evaluation ───────────────────────────────────────────────────────────

#[derive(Debug, Deserialize)]
pub(super) struct DatasetParams {
    name: Option<String>,
}

#[derive(Debug, Serialize)]
pub(super) struct DatasetCreated {
    dataset: EvalDatasetSummary,
    report: ImportReport,
}

pub(super) async fn create_dataset(
    State(state): State<AppState>,
    Query(params): Query<DatasetParams>,
    body: Bytes,
) -> Result<(StatusCode, Json<DatasetCreated>), ApiError> {
    let name = params.name.unwrap_or_else(|| "dataset".into());
    let (dataset, report) = state.store().create_dataset(&name, &body)?;
    let dataset = EvalDatasetSummary {
        id: dataset.id,
        name: dataset.name,
        created_at: dataset.created_at,
        item_count: dataset.items.len(),
    };
    Ok((StatusCode::CREATED, Json(DatasetCreated { dataset, report })))
}

pub(super) async fn list_datasets(State(state): State<AppState>) -> Json<Vec<EvalDatasetSummary>> {
    Json(state.store().dataset_summaries())
}

#[derive(Debug, Deserialize)]
pub(super) struct RunRequest {
    dataset_id: EntryId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunAccepted {
    pub run_id: EntryId,
    pub status: RunStatus,
}

pub(super) async fn start_run(
    State(state): State<AppState>,
    Json(req): Json<RunRequest>,
) -> Result<(StatusCode, Json<RunAccepted>), ApiError> {
    let store = state.store().clone();
    let dataset = store
        .dataset(req.dataset_id)
        .ok_or_else(|| ApiError::not_found(format!("dataset {} not found", req.dataset_id)))?;
    let run_id = store.allocate_run_id();
    let placeholder = EvalRun {
        id: run_id,
        dataset_id: dataset.id,
        status: RunStatus::Running,
        per_item: Vec::new(),
        corpus_chrfpp_mt: None,
        corpus_chrfpp_ape: None,
        scored_items: 0,
        failed_items: 0,
        started_at: store.clock().now(),
        finished_at: None,
        error: None,
    };
    store.save_run(&placeholder)?;

    let engine = state.engine.clone();
    let slot = state.eval_slot.clone();
    let options = state.eval_options;
    tokio::spawn(async move {
        let _turn = slot.lock().await;
        if let Err(e) = metrics::run_eval(&engine, &dataset, Some(run_id), options).await {
            log::error!("evaluation run {run_id} failed: {e}");
            let failed = EvalRun {
                status: RunStatus::Failed,
                finished_at: Some(store.clock().now()),
                error: Some(e.to_string()),
                ..placeholder
            };
            if let Err(e) = store.save_run(&failed) {
                log::error!("cannot record failure of run {run_id}: {e}");
            }
        }
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(RunAccepted {
            run_id,
            status: RunStatus::Running,
        }),
    ))
}

pub(super) async fn get_run(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<EvalRun> {
    state
        .store()
        .run(EntryId(id))
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("run {id} not found")))
}

pub(super) async fn export_run(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Response, ApiError> {
    let run = state
        .store()
        .run(EntryId(id))
        .ok_or_else(|| ApiError::not_found(format!("run {id} not found")))?;
    let csv = metrics::export_csv(&run).map_err(|e| ApiError::new(super::ErrorCode::Storage, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
