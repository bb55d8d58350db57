//! JSON-over-HTTP API.
//!
//! Every response body is either the declared payload or the
//! [`ApiError`] envelope. When an admin token is configured, mutating
//! requests must carry `Authorization: Bearer <token>`; reads and
//! `POST /api/translate` stay open.

mod error;
mod handlers;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Request, State};
use axum::http::{header, HeaderValue, Method};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::Mutex;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::backends::BackendProvider;
use crate::metrics::EvalOptions;
use crate::pipeline::Engine;
use crate::store::{EngineConfig, Store, StoreError};

pub use error::{ApiError, ErrorCode};
pub use handlers::{RunAccepted, SaveTmRequest, TranslateRequest, TranslateResponse};

pub const ADMIN_TOKEN_ENV: &str = "TULUN_ADMIN_TOKEN";

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    pub admin_token: Option<String>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    pub eval: EvalOptions,
}

impl ServiceOptions {
    /// Reads the admin token from `TULUN_ADMIN_TOKEN`.
    pub fn from_env() -> Self {
        Self {
            admin_token: std::env::var(ADMIN_TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            ..Self::default()
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Engine,
    admin_token: Option<Arc<str>>,
    eval_options: EvalOptions,
    /// Serializes evaluation runs.
    eval_slot: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(engine: Engine, options: &ServiceOptions) -> Self {
        Self {
            engine,
            admin_token: options.admin_token.as_deref().map(Arc::from),
            eval_options: options.eval,
            eval_slot: Arc::new(Mutex::new(())),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        self.engine.store()
    }
}

fn is_mutating(method: &Method, path: &str) -> bool {
    let writes = matches!(*method, Method::POST | Method::PUT | Method::DELETE | Method::PATCH);
    writes && path != "/api/translate"
}

async fn require_admin(State(state): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.admin_token {
        if is_mutating(request.method(), request.uri().path()) {
            let presented = request
                .headers()
                .get(header::AUTHORIZATION)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "));
            if presented != Some(expected.as_ref()) {
                return ApiError::new(ErrorCode::Unauthorized, "missing or invalid bearer token")
                    .into_response();
            }
        }
    }
    next.run(request).await
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION]);
    match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(value) => layer.allow_origin(AllowOrigin::exact(value)),
        None => layer.allow_origin(Any),
    }
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Router {
    use handlers::*;

    Router::new()
        .route("/api/translate", post(translate))
        .route("/api/tm/save", post(save_tm))
        .route("/api/glossary", get(list_glossary).post(put_glossary))
        .route("/api/glossary/import", post(import_glossary))
        .route("/api/glossary/{id}", get(get_glossary).delete(delete_glossary))
        .route("/api/tm", get(list_tm).post(put_tm))
        .route("/api/tm/import", post(import_tm))
        .route("/api/tm/{id}", get(get_tm).delete(delete_tm))
        .route("/api/config", get(get_config).put(put_config))
        .route("/api/eval/datasets", get(list_datasets).post(create_dataset))
        .route("/api/eval/run", post(start_run))
        .route("/api/eval/runs/{id}", get(get_run))
        .route("/api/eval/runs/{id}/export", get(export_run))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(middleware::from_fn_with_state(state.clone(), require_admin))
        .layer(cors(cors_origin))
        .with_state(state)
}

/// Builds the application around an existing store and backends.
pub fn app(store: Arc<Store>, backends: Arc<dyn BackendProvider>, options: &ServiceOptions) -> Router {
    let state = AppState::new(Engine::new(store, backends), options);
    router(state, options.cors_origin.as_deref())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot open store: {0}")]
    Store(#[from] StoreError),
    #[error("cannot read config {}: {reason}", path.display())]
    Config { path: PathBuf, reason: String },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens the store (building the TM index), optionally installs the config
/// file found at `config_path`, and serves until the process is stopped.
pub async fn serve(
    config_path: Option<&Path>,
    store_dir: &Path,
    bind_addr: SocketAddr,
    backends: Arc<dyn BackendProvider>,
    options: ServiceOptions,
) -> Result<(), ServeError> {
    let store = Arc::new(Store::open(store_dir)?);
    if let Some(path) = config_path {
        let config_err = |reason: String| ServeError::Config {
            path: path.to_path_buf(),
            reason,
        };
        let bytes = std::fs::read(path).map_err(|e| config_err(e.to_string()))?;
        let config: EngineConfig = serde_json::from_slice(&bytes).map_err(|e| config_err(e.to_string()))?;
        store.replace_config(config)?;
    }
    let listener = tokio::net::TcpListener::bind(bind_addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: bind_addr,
            source,
        })?;
    log::info!(
        "serving {} glossary entries and {} TM entries on {}",
        store.glossary_len(),
        store.tm_len(),
        listener.local_addr()?
    );
    axum::serve(listener, app(store, backends, &options)).await?;
    Ok(())
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::validation("method not allowed for this endpoint")
}
