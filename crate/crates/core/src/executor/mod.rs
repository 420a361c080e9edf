//! Pipeline Executor.
//!
//! Runs a validated pipeline one node at a time in topological order,
//! calling model APIs over HTTP and applying adapters in-process. Every node
//! is timed on a monotonic clock and the time spent inside model round trips
//! is split out, so a run's wall time decomposes exactly into model time and
//! orchestration overhead.
//!
//! A node with several predecessors takes the payload of the predecessor
//! that ran last.

mod adapter;
mod payload;
mod trace;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use adapter::{apply_adapter, clean_text, AdapterSpec, Transform};
pub use payload::{Payload, PayloadError};
pub use trace::{compute_overhead, duration_ms, ExecutionTrace, NodeTiming, OverheadSummary};

use crate::graph::{validate_pipeline, DataKind, Node, NodeKind, PipelineGraph, ValidationReport};
use crate::hub::{Backend, ModelEntry, ModelHub};
use crate::rules::{bhashini_ruleset_with_catalog, effective_output_language, RuleSet};

#[derive(Debug, Clone)]
pub struct ExecutorConfig {
    /// Per-request timeout for model calls.
    pub model_timeout: Duration,
    /// Pause before the single retry after a transport error.
    pub retry_backoff: Duration,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            model_timeout: Duration::from_secs(120),
            retry_backoff: Duration::from_millis(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvokeError {
    #[error("model API returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("model call timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed model response: {0}")]
    MalformedResponse(String),
    #[error("model expects {expected} input, got {actual}")]
    KindMismatch { expected: DataKind, actual: DataKind },
    #[error("{0:?}-backed models cannot be executed")]
    UnsupportedBackend(Backend),
}

impl InvokeError {
    pub fn code(&self) -> &'static str {
        match self {
            InvokeError::Http { .. } => "http-error",
            InvokeError::Transport(_) => "transport-error",
            InvokeError::Timeout(_) => "timeout",
            InvokeError::MalformedResponse(_) => "malformed-response",
            InvokeError::KindMismatch { .. } => "kind-mismatch",
            InvokeError::UnsupportedBackend(_) => "unsupported-backend",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeFailureCause {
    #[error("model `{0}` is not in the hub")]
    ModelNotFound(String),
    #[error(transparent)]
    Invoke(#[from] InvokeError),
    #[error("adapter expects {expected} input, got {actual}")]
    AdapterKindMismatch { expected: DataKind, actual: DataKind },
    #[error("node has no valid adapter transform")]
    InvalidAdapter,
    #[error("no payload reached this node")]
    NoInput,
}

#[derive(Debug, Clone, Error)]
pub enum ExecError {
    #[error("pipeline failed validation ({} violation(s))", .0.violations.len())]
    InvalidPipeline(ValidationReport),
    #[error("input node expects {expected}, got {actual}")]
    InputKindMismatch { expected: DataKind, actual: DataKind },
    #[error("invalid input payload: {0}")]
    InvalidPayload(#[from] PayloadError),
    #[error("expected {expected} payload, got {actual}")]
    KindMismatch { expected: DataKind, actual: DataKind },
    #[error("node `{node_id}` failed: {cause}")]
    NodeFailure {
        node_id: String,
        cause: NodeFailureCause,
        /// Timings of the nodes that completed before the failure.
        trace: Box<ExecutionTrace>,
    },
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::InvalidPipeline(_) => "invalid-pipeline",
            ExecError::InputKindMismatch { .. } => "input-kind-mismatch",
            ExecError::InvalidPayload(_) => "invalid-payload",
            ExecError::KindMismatch { .. } => "kind-mismatch",
            ExecError::NodeFailure { .. } => "node-failure",
        }
    }
}

/// Result of a model call together with its measured round trip.
#[derive(Debug, Clone)]
pub struct ModelResponse {
    pub payload: Payload,
    pub round_trip: Duration,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutput {
    pub output: Payload,
    pub trace: ExecutionTrace,
}

pub struct Executor {
    hub: Arc<ModelHub>,
    rules: RuleSet,
    client: reqwest::Client,
    config: ExecutorConfig,
}

impl Executor {
    pub fn new(hub: Arc<ModelHub>, config: ExecutorConfig) -> Self {
        let client = reqwest::Client::builder()
            .timeout(config.model_timeout)
            .build()
            .expect("http client builds with static configuration");
        let rules = bhashini_ruleset_with_catalog(hub.clone());
        Self {
            hub,
            rules,
            client,
            config,
        }
    }

    pub fn hub(&self) -> &Arc<ModelHub> {
        &self.hub
    }

    /// The rule set pipelines are validated against before running.
    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub async fn execute(&self, pipeline: &PipelineGraph, input: Payload) -> Result<ExecutionOutput, ExecError> {
        let run_start = Instant::now();

        let report = validate_pipeline(pipeline, &self.rules);
        if !report.ok {
            return Err(ExecError::InvalidPipeline(report));
        }
        let order = pipeline
            .topological_order()
            .map_err(|_| ExecError::InvalidPipeline(validate_pipeline(pipeline, &self.rules)))?;
        let input_node = pipeline
            .nodes()
            .iter()
            .find(|n| n.kind == NodeKind::Input)
            .expect("validated pipeline has an input node");
        let expected = input_node.data_kind().expect("validated input node has a data kind");
        if input.kind != expected {
            return Err(ExecError::InputKindMismatch {
                expected,
                actual: input.kind,
            });
        }
        input.check()?;

        let position: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut outputs: Vec<Option<Payload>> = vec![None; order.len()];
        let mut timings = Vec::with_capacity(order.len());
        let mut initial = Some(input);

        for (pos, id) in order.iter().enumerate() {
            let node = pipeline.node(id).expect("order only names pipeline nodes");
            let started = run_start.elapsed();

            let incoming = if node.kind == NodeKind::Input {
                initial.take()
            } else {
                pipeline
                    .predecessors(id)
                    .filter_map(|p| position.get(p).copied())
                    .max()
                    .and_then(|p| outputs[p].clone())
            };
            let result = match incoming {
                Some(payload) => self.run_node(node, payload).await,
                None => Err(NodeFailureCause::NoInput),
            };

            match result {
                Ok((payload, model)) => {
                    timings.push(NodeTiming::new(
                        id.clone(),
                        node.kind,
                        started,
                        run_start.elapsed(),
                        model,
                    ));
                    outputs[pos] = Some(payload);
                }
                Err(cause) => {
                    let trace = ExecutionTrace::finish(pipeline.id.clone(), timings, run_start.elapsed());
                    return Err(ExecError::NodeFailure {
                        node_id: id.clone(),
                        cause,
                        trace: Box::new(trace),
                    });
                }
            }
        }

        let final_pos = order
            .iter()
            .rposition(|id| pipeline.node(id).is_some_and(|n| n.kind == NodeKind::Output))
            .unwrap_or(order.len() - 1);
        let output = outputs[final_pos].take().expect("every executed node has an output");
        let trace = ExecutionTrace::finish(pipeline.id.clone(), timings, run_start.elapsed());
        Ok(ExecutionOutput { output, trace })
    }

    /// Runs one node, returning its output and the time spent in model calls.
    async fn run_node(&self, node: &Node, payload: Payload) -> Result<(Payload, Duration), NodeFailureCause> {
        match node.kind {
            NodeKind::Input => {
                let mut payload = payload;
                if let Some(lang) = node.properties.get("lang") {
                    payload
                        .metadata
                        .entry("lang".to_string())
                        .or_insert_with(|| lang.clone());
                }
                Ok((payload, Duration::ZERO))
            }
            NodeKind::Output => Ok((payload, Duration::ZERO)),
            NodeKind::Adapter => {
                let spec = AdapterSpec::from_node(node).ok_or(NodeFailureCause::InvalidAdapter)?;
                let out = apply_adapter(&spec, payload).map_err(|e| match e {
                    ExecError::KindMismatch { expected, actual } => {
                        NodeFailureCause::AdapterKindMismatch { expected, actual }
                    }
                    _ => NodeFailureCause::InvalidAdapter,
                })?;
                Ok((out, Duration::ZERO))
            }
            _ => {
                let model_ref = node.model_ref.as_deref().unwrap_or_default();
                let entry = self
                    .hub
                    .get_model(model_ref)
                    .map_err(|_| NodeFailureCause::ModelNotFound(model_ref.to_string()))?;
                let carried = payload.metadata.clone();
                let mut request = payload;
                request.metadata.extend(node.properties.clone());
                let response = self.invoke_model(&entry, &request).await?;
                let mut out = response.payload;
                let mut metadata = carried;
                metadata.extend(out.metadata);
                if let Some(lang) = effective_output_language(node) {
                    metadata.insert("lang".to_string(), lang.to_string());
                }
                out.metadata = metadata;
                Ok((out, response.round_trip))
            }
        }
    }

    /// Calls `entry`'s API once per its request template, retrying a single
    /// time after a transport error.
    pub async fn invoke_model(&self, entry: &ModelEntry, payload: &Payload) -> Result<ModelResponse, InvokeError> {
        if entry.backend != Backend::Api {
            return Err(InvokeError::UnsupportedBackend(entry.backend));
        }
        if payload.kind != entry.input_kind {
            return Err(InvokeError::KindMismatch {
                expected: entry.input_kind,
                actual: payload.kind,
            });
        }
        let endpoint = entry.endpoint.as_deref().unwrap_or_default();
        let url = format!("{}{}", endpoint.trim_end_matches('/'), entry.request_template.path);
        let body = request_body(entry, payload);

        let mut round_trip = Duration::ZERO;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let started = Instant::now();
            let result = self.round_trip(&url, &body).await;
            round_trip += started.elapsed();
            match result {
                Err(InvokeError::Transport(_)) if attempts == 1 => {
                    tokio::time::sleep(self.config.retry_backoff).await;
                }
                Err(e) => return Err(e),
                Ok(response) => {
                    let payload = decode_response(entry, response)?;
                    return Ok(ModelResponse {
                        payload,
                        round_trip,
                        attempts,
                    });
                }
            }
        }
    }

    async fn round_trip(&self, url: &str, body: &Value) -> Result<Value, InvokeError> {
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                InvokeError::Timeout(self.config.model_timeout)
            } else {
                InvokeError::Transport(e.to_string())
            }
        };
        let response = self.client.post(url).json(body).send().await.map_err(classify)?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(InvokeError::Http {
                status: status.as_u16(),
                body,
            });
        }
        let bytes = response.bytes().await.map_err(classify)?;
        serde_json::from_slice(&bytes).map_err(|e| InvokeError::MalformedResponse(e.to_string()))
    }
}

fn request_body(entry: &ModelEntry, payload: &Payload) -> Value {
    let mut metadata: BTreeMap<String, String> = payload.metadata.clone();
    metadata.insert("kind".to_string(), payload.kind.as_str().to_string());
    if let Some(format) = &payload.format {
        metadata.insert("format".to_string(), format.clone());
    }
    let mut body = Map::new();
    body.insert(
        entry.request_template.payload_field.clone(),
        Value::String(payload.data.clone()),
    );
    body.insert(
        "metadata".to_string(),
        serde_json::to_value(metadata).expect("string map"),
    );
    Value::Object(body)
}

fn decode_response(entry: &ModelEntry, response: Value) -> Result<Payload, InvokeError> {
    let field = &entry.request_template.response_field;
    let data = response
        .get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| InvokeError::MalformedResponse(format!("response has no string field `{field}`")))?;
    let mut metadata: BTreeMap<String, String> = response
        .get("metadata")
        .and_then(Value::as_object)
        .map(|m| {
            m.iter()
                .filter_map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())))
                .collect()
        })
        .unwrap_or_default();
    metadata.remove("kind");
    let format = metadata
        .remove("format")
        .or_else(|| payload::default_format(entry.output_kind).map(str::to_string))
        .filter(|_| entry.output_kind != DataKind::Text);
    let payload = Payload {
        kind: entry.output_kind,
        data: data.to_string(),
        format,
        metadata,
    };
    payload
        .check()
        .map_err(|e| InvokeError::MalformedResponse(e.to_string()))?;
    Ok(payload)
}
