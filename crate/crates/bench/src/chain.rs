//! Chain benchmarks: build MT or ASR+TTS chains, validate them, run them
//! repeatedly and average the trace decomposition per chain length.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use locoml_core::rules::LanguagePair;
use locoml_core::{
    validate_pipeline, DataKind, ExecError, ExecutionTrace, Executor, ExecutorConfig, LanguageSupport, ModelEntry,
    ModelHub, Node, NodeKind, Payload, PipelineGraph, ValidationReport,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mock::{self, MockServer};

/// Languages the MT chain rotates through, one hop per model.
pub const MT_LANGS: [&str; 3] = ["en", "hi", "ta"];
pub const SPEECH_LANG: &str = "en";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "mt")]
    Mt,
    #[serde(rename = "asr-tts")]
    AsrTts,
}

impl Scenario {
    /// Model nodes in a chain built for `count`; ASR+TTS counts are pairs.
    pub fn model_count(self, count: usize) -> usize {
        match self {
            Scenario::Mt => count,
            Scenario::AsrTts => 2 * count,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Mt => "mt",
            Scenario::AsrTts => "asr-tts",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mt" => Ok(Scenario::Mt),
            "asr-tts" => Ok(Scenario::AsrTts),
            other => Err(format!("unknown task `{other}` (expected mt or asr-tts)")),
        }
    }
}

/// Mean decomposition over `trials` runs of one chain length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_models: usize,
    pub total_ms: f64,
    pub model_ms: f64,
    pub overhead_ms: f64,
    pub trials: usize,
}

impl BenchRow {
    pub fn from_traces(n_models: usize, traces: &[ExecutionTrace]) -> Self {
        let trials = traces.len();
        let mean = |f: fn(&ExecutionTrace) -> Duration| {
            traces.iter().map(|t| f(t).as_secs_f64() * 1000.0).sum::<f64>() / trials as f64
        };
        let total_ms = mean(|t| t.total);
        let model_ms = mean(|t| t.model);
        Self {
            n_models,
            total_ms,
            model_ms,
            overhead_ms: total_ms - model_ms,
            trials,
        }
    }

    pub fn overhead_fraction(&self) -> f64 {
        self.overhead_ms / self.total_ms
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("mock server at {url} is unreachable: {reason}")]
    MockUnreachable { url: String, reason: String },
    #[error("constructed {scenario} chain of {count} failed validation: {report:?}")]
    ValidationFailure {
        scenario: Scenario,
        count: usize,
        report: ValidationReport,
    },
    #[error("chain execution failed: {0}")]
    Execution(#[from] ExecError),
    #[error("counts must be positive")]
    ZeroCount,
    #[error("trials must be positive")]
    ZeroTrials,
    #[error("could not start mock server: {0}")]
    Io(#[from] std::io::Error),
}

/// Hub, executor and model ids wired to a mock server.
pub struct ChainBench {
    base_url: String,
    executor: Executor,
    mt_models: Vec<String>,
    asr_model: String,
    tts_model: String,
}

impl ChainBench {
    /// Registers one hub entry per MT hop and one ASR and TTS entry, all
    /// served by the all-task mock server at `base_url`.
    pub fn new(base_url: &str, config: ExecutorConfig) -> Self {
        let base_url = base_url.trim_end_matches('/').to_string();
        let hub = Arc::new(ModelHub::in_memory());
        let endpoint = |task: NodeKind| format!("{base_url}/{task}");
        let mt_models = (0..MT_LANGS.len())
            .map(|i| {
                let (src, tgt) = mt_hop(i);
                let pair = LanguageSupport::Pair(LanguagePair::new(src, tgt));
                let entry = ModelEntry::api(
                    format!("mock-mt-{src}-{tgt}"),
                    "1",
                    NodeKind::Mt,
                    vec![pair],
                    endpoint(NodeKind::Mt),
                );
                hub.register_model(entry).expect("fresh hub accepts distinct entries")
            })
            .collect();
        let speech = |task: NodeKind| {
            let entry = ModelEntry::api(
                format!("mock-{task}-{SPEECH_LANG}"),
                "1",
                task,
                vec![LanguageSupport::Single(SPEECH_LANG.to_string())],
                endpoint(task),
            );
            hub.register_model(entry).expect("fresh hub accepts distinct entries")
        };
        let asr_model = speech(NodeKind::Asr);
        let tts_model = speech(NodeKind::Tts);
        Self {
            base_url,
            executor: Executor::new(hub, config),
            mt_models,
            asr_model,
            tts_model,
        }
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub async fn check_reachable(&self) -> Result<(), BenchError> {
        let url = format!("{}/health", self.base_url);
        let unreachable = |reason: String| BenchError::MockUnreachable {
            url: url.clone(),
            reason,
        };
        let response = reqwest::get(&url).await.map_err(|e| unreachable(e.to_string()))?;
        if response.status().is_success() {
            Ok(())
        } else {
            Err(unreachable(format!("health check returned {}", response.status())))
        }
    }

    /// Builds the chain through the graph API and checks it validates.
    pub fn build_chain(&self, scenario: Scenario, count: usize) -> Result<PipelineGraph, BenchError> {
        if count == 0 {
            return Err(BenchError::ZeroCount);
        }
        let rules = self.executor.rules();
        let name = format!("{scenario}-x{count}");
        let input = match scenario {
            Scenario::Mt => Node::input("in", DataKind::Text).with_property("lang", MT_LANGS[0]),
            Scenario::AsrTts => Node::input("in", DataKind::Audio).with_property("lang", SPEECH_LANG),
        };
        let models: Vec<Node> = match scenario {
            Scenario::Mt => (0..count)
                .map(|i| {
                    let (src, tgt) = mt_hop(i);
                    Node::mt(format!("mt{i}"), src, tgt, &self.mt_models[i % MT_LANGS.len()])
                })
                .collect(),
            Scenario::AsrTts => (0..count)
                .flat_map(|i| {
                    [
                        Node::asr(format!("asr{i}"), SPEECH_LANG, &self.asr_model),
                        Node::tts(format!("tts{i}"), SPEECH_LANG, &self.tts_model),
                    ]
                })
                .collect(),
        };

        let invalid = |report| BenchError::ValidationFailure {
            scenario,
            count,
            report,
        };
        let bug = |e: locoml_core::GraphError| {
            invalid(ValidationReport {
                ok: false,
                violations: vec![locoml_core::Violation {
                    code: e.code().to_string(),
                    node_ids: vec![],
                    rule_name: None,
                    message: e.to_string(),
                }],
            })
        };

        let mut graph = PipelineGraph::new(&name, &name).add_node(input).map_err(bug)?;
        let mut prev = "in".to_string();
        for node in models.into_iter().chain([Node::output("out")]) {
            let id = node.id.clone();
            graph = graph
                .add_node(node)
                .map_err(bug)?
                .add_edge(&prev, &id, rules)
                .map_err(bug)?;
            prev = id;
        }
        let report = validate_pipeline(&graph, rules);
        if !report.ok {
            return Err(invalid(report));
        }
        Ok(graph)
    }

    pub fn chain_input(scenario: Scenario, text: &str) -> Payload {
        match scenario {
            Scenario::Mt => Payload::text(text),
            Scenario::AsrTts => Payload::binary(DataKind::Audio, &mock::tts_audio(text), "wav"),
        }
    }

    /// One row per count: mean of `trials` executions after one warm-up run.
    pub async fn run(&self, scenario: Scenario, counts: &[usize], trials: usize) -> Result<Vec<BenchRow>, BenchError> {
        Ok(self
            .measure(scenario, counts, trials)
            .await?
            .into_iter()
            .map(|m| m.row)
            .collect())
    }

    /// Like [`ChainBench::run`], keeping every trial's trace.
    pub async fn measure(
        &self,
        scenario: Scenario,
        counts: &[usize],
        trials: usize,
    ) -> Result<Vec<Measurement>, BenchError> {
        if trials == 0 {
            return Err(BenchError::ZeroTrials);
        }
        self.check_reachable().await?;
        let chains = counts
            .iter()
            .map(|&c| self.build_chain(scenario, c))
            .collect::<Result<Vec<_>, _>>()?;

        let input = Self::chain_input(scenario, "benchmark input");
        if let Some(first) = chains.first() {
            self.executor.execute(first, input.clone()).await?;
        }

        let mut out = Vec::with_capacity(counts.len());
        for (chain, &count) in chains.iter().zip(counts) {
            let mut traces = Vec::with_capacity(trials);
            for _ in 0..trials {
                traces.push(self.executor.execute(chain, input.clone()).await?.trace);
            }
            out.push(Measurement {
                row: BenchRow::from_traces(scenario.model_count(count), &traces),
                traces,
            });
        }
        Ok(out)
    }
}

/// One chain length: the mean row and the traces it was computed from.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub row: BenchRow,
    pub traces: Vec<ExecutionTrace>,
}

fn mt_hop(i: usize) -> (&'static str, &'static str) {
    let n = MT_LANGS.len();
    (MT_LANGS[i % n], MT_LANGS[(i + 1) % n])
}

/// Starts an in-process mock server at `latency_ms` and benchmarks against it.
pub async fn run_chain_benchmark(
    scenario: Scenario,
    counts: &[usize],
    latency_ms: u64,
    trials: usize,
) -> Result<Vec<BenchRow>, BenchError> {
    let server: MockServer = mock::spawn_all_tasks(Duration::from_millis(latency_ms), 0).await?;
    let bench = ChainBench::new(&server.base_url(), ExecutorConfig::default());
    bench.run(scenario, counts, trials).await
}
