//! Executor runs against a minimal in-process MT stub speaking the
//! `{"data", "metadata"}` wire format.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use locoml_core::rules::LanguagePair;
use locoml_core::{
    bhashini_ruleset, compute_overhead, DataKind, ExecError, Executor, ExecutorConfig, InvokeError, LanguageSupport,
    ModelEntry, ModelHub, Node, NodeFailureCause, NodeKind, Payload, PipelineGraph,
};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Stub {
    calls: Arc<AtomicUsize>,
}

async fn mt(State(stub): State<Stub>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    stub.calls.fetch_add(1, Ordering::SeqCst);
    tokio::time::sleep(Duration::from_millis(20)).await;
    let meta = &body["metadata"];
    let data = body["data"].as_str().unwrap_or_default();
    let (Some(src), Some(tgt)) = (meta["source_lang"].as_str(), meta["target_lang"].as_str()) else {
        return (StatusCode::BAD_REQUEST, Json(json!({"error": "missing languages"})));
    };
    (
        StatusCode::OK,
        Json(json!({"data": format!("MT({src}->{tgt}): {data}")})),
    )
}

async fn broken() -> (StatusCode, &'static str) {
    (StatusCode::INTERNAL_SERVER_ERROR, "boom")
}

async fn spawn_stub() -> (String, Stub) {
    let stub = Stub::default();
    let app = Router::new()
        .route("/infer", post(mt))
        .route("/broken/infer", post(broken))
        .with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), stub)
}

fn mt_entry(name: &str, endpoint: &str, pairs: &[(&str, &str)]) -> ModelEntry {
    let pairs = pairs
        .iter()
        .map(|(s, t)| LanguageSupport::Pair(LanguagePair::new(*s, *t)))
        .collect();
    ModelEntry::api(name, "1", NodeKind::Mt, pairs, endpoint)
}

fn mt_chain(hops: &[(&str, &str, &str)]) -> PipelineGraph {
    let rules = bhashini_ruleset();
    let mut g = PipelineGraph::new("chain", "chain")
        .add_node(Node::input("in", DataKind::Text))
        .unwrap();
    let mut prev = "in".to_string();
    for (i, (src, tgt, model)) in hops.iter().enumerate() {
        let id = format!("mt{i}");
        g = g
            .add_node(Node::mt(&id, src, tgt, *model))
            .unwrap()
            .add_edge(&prev, &id, &rules)
            .unwrap();
        prev = id;
    }
    g.add_node(Node::output("out"))
        .unwrap()
        .add_edge(&prev, "out", &rules)
        .unwrap()
}

struct Fixture {
    exec: Executor,
    ids: HashMap<&'static str, String>,
    stub: Stub,
}

async fn fixture() -> Fixture {
    let (base, stub) = spawn_stub().await;
    let hub = Arc::new(ModelHub::in_memory());
    let mut ids = HashMap::new();
    ids.insert(
        "en-hi",
        hub.register_model(mt_entry("en-hi", &base, &[("en", "hi")])).unwrap(),
    );
    ids.insert(
        "hi-ta",
        hub.register_model(mt_entry("hi-ta", &base, &[("hi", "ta")])).unwrap(),
    );
    ids.insert(
        "dead",
        hub.register_model(mt_entry("dead", "http://127.0.0.1:1", &[("hi", "ta")]))
            .unwrap(),
    );
    ids.insert(
        "broken",
        hub.register_model(mt_entry("broken", &format!("{base}/broken"), &[("hi", "ta")]))
            .unwrap(),
    );
    let config = ExecutorConfig {
        model_timeout: Duration::from_secs(10),
        retry_backoff: Duration::from_millis(100),
    };
    Fixture {
        exec: Executor::new(hub, config),
        ids,
        stub,
    }
}

#[tokio::test]
async fn single_mt_chain() {
    let f = fixture().await;
    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"])]);
    let out = f.exec.execute(&g, Payload::text("hello")).await.unwrap();
    assert_eq!(out.output.data, "MT(en->hi): hello");
    assert_eq!(out.output.metadata.get("lang").map(String::as_str), Some("hi"));

    let trace = &out.trace;
    let order: Vec<&str> = trace.nodes.iter().map(|n| n.node_id.as_str()).collect();
    assert_eq!(order, vec!["in", "mt0", "out"]);
    assert_eq!(trace.nodes.iter().filter(|n| !n.model.is_zero()).count(), 1);
    assert_eq!(trace.total, trace.model + trace.overhead);
    let node_sum: Duration = trace.nodes.iter().map(|n| n.duration()).sum();
    assert!(node_sum <= trace.total);
    assert!(trace.model >= Duration::from_millis(20));
    let summary = compute_overhead(trace);
    assert!((summary.overhead_ms - (summary.total_ms - summary.model_ms)).abs() < 1e-9);
}

#[tokio::test]
async fn chained_mt_composes() {
    let f = fixture().await;
    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"]), ("hi", "ta", &f.ids["hi-ta"])]);
    let out = f.exec.execute(&g, Payload::text("hello")).await.unwrap();
    assert_eq!(out.output.data, "MT(hi->ta): MT(en->hi): hello");
}

#[tokio::test]
async fn repeated_runs_give_identical_output() {
    let f = fixture().await;
    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"]), ("hi", "ta", &f.ids["hi-ta"])]);
    let a = f.exec.execute(&g, Payload::text("same")).await.unwrap();
    let b = f.exec.execute(&g, Payload::text("same")).await.unwrap();
    assert_eq!(
        serde_json::to_vec(&a.output).unwrap(),
        serde_json::to_vec(&b.output).unwrap()
    );
}

#[tokio::test]
async fn unreachable_endpoint_fails_that_node_after_one_retry() {
    let f = fixture().await;
    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"]), ("hi", "ta", &f.ids["dead"])]);
    let started = std::time::Instant::now();
    let err = f.exec.execute(&g, Payload::text("hello")).await.unwrap_err();
    assert!(
        started.elapsed() >= Duration::from_millis(100),
        "retry backoff not applied"
    );
    let ExecError::NodeFailure { node_id, cause, trace } = err else {
        panic!("expected node failure, got {err:?}");
    };
    assert_eq!(node_id, "mt1");
    assert!(
        matches!(cause, NodeFailureCause::Invoke(InvokeError::Transport(_))),
        "{cause:?}"
    );
    let done: Vec<&str> = trace.nodes.iter().map(|n| n.node_id.as_str()).collect();
    assert_eq!(done, vec!["in", "mt0"]);
    assert_eq!(trace.total, trace.model + trace.overhead);
}

#[tokio::test]
async fn http_500_is_reported_without_retry() {
    let f = fixture().await;
    let before = f.stub.calls.load(Ordering::SeqCst);
    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"]), ("hi", "ta", &f.ids["broken"])]);
    let err = f.exec.execute(&g, Payload::text("x")).await.unwrap_err();
    let ExecError::NodeFailure { cause, .. } = err else {
        panic!()
    };
    assert!(matches!(
        cause,
        NodeFailureCause::Invoke(InvokeError::Http { status: 500, .. })
    ));
    assert_eq!(f.stub.calls.load(Ordering::SeqCst) - before, 1);
}

#[tokio::test]
async fn invalid_pipeline_and_kind_mismatch() {
    let f = fixture().await;
    let no_input = PipelineGraph::new("p", "p").add_node(Node::output("o")).unwrap();
    let err = f.exec.execute(&no_input, Payload::text("x")).await.unwrap_err();
    assert_eq!(err.code(), "invalid-pipeline");

    let g = mt_chain(&[("en", "hi", &f.ids["en-hi"])]);
    let err = f
        .exec
        .execute(&g, Payload::binary(DataKind::Audio, b"x", "wav"))
        .await
        .unwrap_err();
    assert!(matches!(
        err,
        ExecError::InputKindMismatch {
            expected: DataKind::Text,
            actual: DataKind::Audio
        }
    ));
}

#[tokio::test]
async fn unregistered_model_fails_validation() {
    let f = fixture().await;
    let g = mt_chain(&[("en", "hi", "not-registered")]);
    let ExecError::InvalidPipeline(report) = f.exec.execute(&g, Payload::text("x")).await.unwrap_err() else {
        panic!("expected invalid pipeline");
    };
    assert!(report
        .violations
        .iter()
        .any(|v| v.rule_name.as_deref() == Some("language-compatibility")));
}

#[tokio::test]
async fn fan_in_takes_last_predecessor() {
    let f = fixture().await;
    let rules = f.exec.rules().clone();
    let en_hi = f.ids["en-hi"].clone();
    // mt feeds both the cleanup adapter and the output; the output also
    // hears from the adapter, which runs later, so its payload wins.
    let g = PipelineGraph::new("fan", "fan")
        .add_node(Node::input("in", DataKind::Text).with_property("lang", "en"))
        .unwrap()
        .add_node(Node::mt("mt", "en", "hi", &en_hi))
        .unwrap()
        .add_node(Node::adapter("clean", "text_cleanup"))
        .unwrap()
        .add_node(Node::output("out"))
        .unwrap()
        .add_edge("in", "mt", &rules)
        .unwrap()
        .add_edge("mt", "clean", &rules)
        .unwrap()
        .add_edge("mt", "out", &rules)
        .unwrap()
        .add_edge("clean", "out", &rules)
        .unwrap();
    let out = f.exec.execute(&g, Payload::text("  spaced   out ")).await.unwrap();
    assert_eq!(
        out.trace.nodes.iter().map(|n| n.node_id.as_str()).collect::<Vec<_>>(),
        vec!["in", "mt", "clean", "out"]
    );
    assert_eq!(out.output.data, "MT(en->hi): spaced out");
}
