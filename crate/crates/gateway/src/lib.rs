//! REST surface over the model hub, pipeline repository and executor.
//!
//! | route | purpose |
//! |-------|---------|
//! | `POST /models`, `GET /models`, `GET /models/{id}` | hub registration and lookup |
//! | `POST /pipelines`, `GET /pipelines`, `GET /pipelines/{id}` | repository |
//! | `POST /pipelines/validate-edge` | edge verdicts for the designer |
//! | `POST /execute` | run an unsaved pipeline |
//! | `POST /run/{endpoint_id}` | run a saved pipeline |
//!
//! Every error body is an [`ApiError`].

use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use locoml_core::{
    ExecError, Executor, ExecutorConfig, HubError, LanguagePair, ModelEntry, ModelFilter, ModelHub, NodeKind, Payload,
    PipelineGraph, PipelineRepository, RepositoryError,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone)]
pub struct AppState {
    pub hub: Arc<ModelHub>,
    pub repo: Arc<PipelineRepository>,
    pub executor: Arc<Executor>,
}

impl AppState {
    pub fn new(hub: Arc<ModelHub>, repo: Arc<PipelineRepository>, config: ExecutorConfig) -> Self {
        let executor = Arc::new(Executor::new(hub.clone(), config));
        Self { hub, repo, executor }
    }

    pub fn in_memory(config: ExecutorConfig) -> Self {
        Self::new(
            Arc::new(ModelHub::in_memory()),
            Arc::new(PipelineRepository::in_memory()),
            config,
        )
    }

    /// Opens (or creates) the hub and repository directories.
    pub fn open(hub_dir: &Path, store_dir: &Path, config: ExecutorConfig) -> Result<Self, StartupError> {
        let hub = Arc::new(ModelHub::open(hub_dir)?);
        let repo = Arc::new(PipelineRepository::open(store_dir)?);
        Ok(Self::new(hub, repo, config))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(with = "status_code")]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

mod status_code {
    use axum::http::StatusCode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(status: &StatusCode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u16(status.as_u16())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StatusCode, D::Error> {
        StatusCode::from_u16(u16::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed-body", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        let status = match &e {
            HubError::DuplicateNameVersion { .. } => StatusCode::CONFLICT,
            HubError::InvalidEntry(_) => StatusCode::UNPROCESSABLE_ENTITY,
            HubError::NotFound(_) => StatusCode::NOT_FOUND,
            HubError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let err = ApiError::new(status, e.code(), e.to_string());
        match e {
            HubError::InvalidEntry(problems) => err.with_details(problems),
            _ => err,
        }
    }
}

impl From<RepositoryError> for ApiError {
    fn from(e: RepositoryError) -> Self {
        let status = match &e {
            RepositoryError::InvalidPipeline(_) => StatusCode::UNPROCESSABLE_ENTITY,
            RepositoryError::NotFound(_) => StatusCode::NOT_FOUND,
            RepositoryError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let err = ApiError::new(status, e.code(), e.to_string());
        match e {
            RepositoryError::InvalidPipeline(report) => err.with_details(report),
            _ => err,
        }
    }
}

impl From<ExecError> for ApiError {
    fn from(e: ExecError) -> Self {
        let code = e.code();
        let message = e.to_string();
        match e {
            ExecError::InvalidPipeline(report) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message).with_details(report)
            }
            ExecError::NodeFailure { node_id, cause, trace } => ApiError::new(StatusCode::BAD_GATEWAY, code, message)
                .with_details(json!({"node_id": node_id, "cause": cause.to_string(), "trace": trace})),
            ExecError::InputKindMismatch { .. } | ExecError::InvalidPayload(_) | ExecError::KindMismatch { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, code, message)
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Bodies are parsed here instead of by the `Json` extractor so that every
/// malformed body gets the same 400 error shape.
fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", post(register_model).get(list_models))
        .route("/models/{id}", get(get_model))
        .route("/pipelines", post(save_pipeline).get(list_pipelines))
        .route("/pipelines/validate-edge", post(validate_edge))
        .route("/pipelines/{id}", get(get_pipeline))
        .route("/execute", post(execute))
        .route("/run/{endpoint_id}", post(run_saved))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such route") })
        .with_state(state)
}

async fn register_model(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<ModelEntry>)> {
    let entry: ModelEntry = parse(&body)?;
    let id = state.hub.register_model(entry)?;
    Ok((StatusCode::CREATED, Json(state.hub.get_model(&id)?)))
}

#[derive(Debug, Deserialize)]
struct ModelQuery {
    task: Option<String>,
    source_lang: Option<String>,
    target_lang: Option<String>,
}

async fn list_models(State(state): State<AppState>, Query(q): Query<ModelQuery>) -> ApiResult<Json<Vec<ModelEntry>>> {
    let task = q
        .task
        .map(|t| t.parse::<NodeKind>())
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid-query", e.to_string()))?;
    let pair = match (q.source_lang, q.target_lang) {
        (Some(s), Some(t)) => Some(LanguagePair::new(s, t)),
        (None, None) => None,
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid-query",
                "source_lang and target_lang must be given together",
            ))
        }
    };
    Ok(Json(state.hub.list_models(&ModelFilter { task, pair })))
}

async fn get_model(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ModelEntry>> {
    Ok(Json(state.hub.get_model(&id)?))
}

#[derive(Debug, Deserialize)]
struct SaveRequest {
    pipeline: PipelineGraph,
    #[serde(default)]
    description: String,
}

async fn save_pipeline(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: SaveRequest = parse(&body)?;
    let endpoint_id = state
        .repo
        .save_pipeline(req.pipeline, req.description, state.executor.rules())?;
    Ok((StatusCode::CREATED, Json(json!({ "endpoint_id": endpoint_id }))))
}

async fn list_pipelines(State(state): State<AppState>) -> Json<Value> {
    Json(json!(state.repo.list_pipelines()))
}

async fn get_pipeline(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let saved = state.repo.load_pipeline(&id)?;
    Ok(Json(json!(&*saved)))
}

#[derive(Debug, Deserialize)]
struct ValidateEdgeRequest {
    pipeline: PipelineGraph,
    source: String,
    target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    pub valid: bool,
    pub failed_rules: Vec<String>,
}

async fn validate_edge(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<EdgeVerdict>> {
    let req: ValidateEdgeRequest = parse(&body)?;
    let rejection = req
        .pipeline
        .check_edge(&req.source, &req.target, state.executor.rules())
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string()))?;
    let failed_rules = rejection.map(|r| r.reasons()).unwrap_or_default();
    Ok(Json(EdgeVerdict {
        valid: failed_rules.is_empty(),
        failed_rules,
    }))
}

#[derive(Debug, Deserialize)]
struct ExecuteRequest {
    pipeline: PipelineGraph,
    input: Payload,
}

async fn execute(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: ExecuteRequest = parse(&body)?;
    let out = state.executor.execute(&req.pipeline, req.input).await?;
    Ok(Json(json!(out)))
}

async fn run_saved(
    State(state): State<AppState>,
    UrlPath(endpoint_id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let saved = state.repo.load_pipeline(&endpoint_id)?;
    let input: Payload = parse(&body)?;
    let out = state.executor.execute(&saved.pipeline, input).await?;
    Ok(Json(json!(out)))
}
