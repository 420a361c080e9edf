//! Deterministic mock model servers.
//!
//! One server answers every task at `POST /{task}/infer`; a server started
//! from a [`MockSpec`] also answers its own task at `POST /infer`. Each
//! request sleeps for the configured latency before anything else happens.
//!
//! | task | input | output |
//! |------|-------|--------|
//! | mt   | text `d` | `MT(src->tgt): d` |
//! | ocr  | image | `OCR(lang): ` + [`OCR_TEXT`] |
//! | tts  | text `d` | audio whose bytes are `TTSAUDIO:` + `d` |
//! | asr  | audio | the text after `TTSAUDIO:`, or `ASR(lang): <byte-count>` |
//!
//! Languages come from the request metadata (`source_lang`/`target_lang`
//! for mt, `lang` otherwise). A `kind` metadata entry that disagrees with
//! the task's input kind, missing languages, or undecodable audio/image
//! data all yield 400.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use locoml_core::NodeKind;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub const TTS_PREFIX: &str = "TTSAUDIO:";
pub const OCR_TEXT: &str = "the quick brown fox";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockSpec {
    pub task: NodeKind,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default)]
    pub port: u16,
}

#[derive(Debug, Clone)]
struct MockState {
    latency: Duration,
    default_task: Option<NodeKind>,
}

pub fn router(latency: Duration, default_task: Option<NodeKind>) -> Router {
    let state = Arc::new(MockState { latency, default_task });
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/infer", post(infer_default))
        .route("/{task}/infer", post(infer_task))
        .with_state(state)
}

fn bad_request(message: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({"error": message.into()}))).into_response()
}

async fn infer_default(State(state): State<Arc<MockState>>, Json(body): Json<Value>) -> Response {
    tokio::time::sleep(state.latency).await;
    match state.default_task {
        Some(task) => respond(task, &body),
        None => (
            StatusCode::NOT_FOUND,
            Json(json!({"error": "no default task; use /{task}/infer"})),
        )
            .into_response(),
    }
}

async fn infer_task(
    State(state): State<Arc<MockState>>,
    Path(task): Path<String>,
    Json(body): Json<Value>,
) -> Response {
    tokio::time::sleep(state.latency).await;
    match task.parse::<NodeKind>() {
        Ok(task) if task.is_model() => respond(task, &body),
        _ => (
            StatusCode::NOT_FOUND,
            Json(json!({"error": format!("unknown task `{task}`")})),
        )
            .into_response(),
    }
}

fn respond(task: NodeKind, body: &Value) -> Response {
    match transform(task, body) {
        Ok((data, metadata)) => Json(json!({"data": data, "metadata": metadata})).into_response(),
        Err(message) => bad_request(message),
    }
}

/// The mock contract itself, independent of HTTP.
pub fn transform(task: NodeKind, body: &Value) -> Result<(String, Map<String, Value>), String> {
    let data = body
        .get("data")
        .and_then(Value::as_str)
        .ok_or("request has no string `data` field")?;
    let meta = body.get("metadata").cloned().unwrap_or_else(|| json!({}));
    let meta_str = |key: &str| meta.get(key).and_then(Value::as_str);
    let (input_kind, _) = task
        .model_ports()
        .ok_or_else(|| format!("`{task}` is not a model task"))?;
    if let Some(kind) = meta_str("kind") {
        if kind != input_kind.as_str() {
            return Err(format!("{task} expects {input_kind} input, got {kind}"));
        }
    }
    let lang = || meta_str("lang").ok_or_else(|| format!("{task} request needs metadata.lang"));
    let decode = |d: &str| {
        STANDARD
            .decode(d)
            .map_err(|e| format!("{task} input is not base64: {e}"))
    };

    let mut out = Map::new();
    let text = match task {
        NodeKind::Mt => {
            let (Some(src), Some(tgt)) = (meta_str("source_lang"), meta_str("target_lang")) else {
                return Err("mt request needs metadata.source_lang and metadata.target_lang".into());
            };
            format!("MT({src}->{tgt}): {data}")
        }
        NodeKind::Ocr => {
            let lang = lang()?;
            decode(data)?;
            format!("OCR({lang}): {OCR_TEXT}")
        }
        NodeKind::Tts => {
            lang()?;
            out.insert("format".into(), json!("wav"));
            STANDARD.encode(format!("{TTS_PREFIX}{data}"))
        }
        NodeKind::Asr => {
            let lang = lang()?;
            let bytes = decode(data)?;
            match bytes.strip_prefix(TTS_PREFIX.as_bytes()) {
                Some(rest) => String::from_utf8(rest.to_vec()).map_err(|_| "embedded text is not UTF-8".to_string())?,
                None => format!("ASR({lang}): {}", bytes.len()),
            }
        }
        _ => unreachable!("model_ports returned Some"),
    };
    Ok((text, out))
}

/// Audio bytes the mock ASR decodes back to `text`.
pub fn tts_audio(text: &str) -> Vec<u8> {
    format!("{TTS_PREFIX}{text}").into_bytes()
}

/// A mock server running on the current tokio runtime.
pub struct MockServer {
    pub addr: SocketAddr,
    handle: JoinHandle<()>,
}

impl MockServer {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Endpoint a hub entry for `task` should use.
    pub fn endpoint(&self, task: NodeKind) -> String {
        format!("{}/{}", self.base_url(), task)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

async fn serve(app: Router, port: u16) -> std::io::Result<MockServer> {
    let listener = TcpListener::bind(("127.0.0.1", port)).await?;
    let addr = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok(MockServer { addr, handle })
}

/// Serves every task under `/{task}/infer`. Port 0 picks a free port.
pub async fn spawn_all_tasks(latency: Duration, port: u16) -> std::io::Result<MockServer> {
    serve(router(latency, None), port).await
}

pub async fn spawn_mock(spec: &MockSpec) -> std::io::Result<MockServer> {
    if !spec.task.is_model() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("mock task must be a model task, got `{}`", spec.task),
        ));
    }
    serve(
        router(Duration::from_millis(spec.latency_ms), Some(spec.task)),
        spec.port,
    )
    .await
}
