use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::NodeKind;

/// Serializes a [`Duration`] as fractional milliseconds.
pub mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Duration::try_from_secs_f64(ms / 1000.0).map_err(serde::de::Error::custom)
    }
}

/// Timing of one node. `started_at` and `finished_at` are offsets from the
/// start of the run on a monotonic clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTiming {
    pub node_id: String,
    pub kind: NodeKind,
    #[serde(rename = "started_at_ms", with = "duration_ms")]
    pub started_at: Duration,
    #[serde(rename = "finished_at_ms", with = "duration_ms")]
    pub finished_at: Duration,
    #[serde(rename = "model_ms", with = "duration_ms")]
    pub model: Duration,
    #[serde(rename = "node_overhead_ms", with = "duration_ms")]
    pub node_overhead: Duration,
}

impl NodeTiming {
    pub fn new(node_id: String, kind: NodeKind, started_at: Duration, finished_at: Duration, model: Duration) -> Self {
        let elapsed = finished_at.saturating_sub(started_at);
        let model = model.min(elapsed);
        Self {
            node_id,
            kind,
            started_at,
            finished_at,
            model,
            node_overhead: elapsed - model,
        }
    }

    pub fn duration(&self) -> Duration {
        self.finished_at - self.started_at
    }
}

/// Per-run timing record. `total = model + overhead` holds exactly on the
/// [`Duration`] fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub pipeline_id: String,
    pub nodes: Vec<NodeTiming>,
    #[serde(rename = "total_ms", with = "duration_ms")]
    pub total: Duration,
    #[serde(rename = "model_ms", with = "duration_ms")]
    pub model: Duration,
    #[serde(rename = "overhead_ms", with = "duration_ms")]
    pub overhead: Duration,
}

impl ExecutionTrace {
    pub(crate) fn finish(pipeline_id: String, nodes: Vec<NodeTiming>, total: Duration) -> Self {
        let model: Duration = nodes.iter().map(|n| n.model).sum();
        let model = model.min(total);
        Self {
            pipeline_id,
            nodes,
            total,
            model,
            overhead: total - model,
        }
    }

    /// A trace without node detail, e.g. for externally measured totals.
    /// `model` is capped at `total`.
    pub fn from_totals(pipeline_id: impl Into<String>, total: Duration, model: Duration) -> Self {
        Self::finish(pipeline_id.into(), Vec::new(), total).with_model(model)
    }

    fn with_model(mut self, model: Duration) -> Self {
        self.model = model.min(self.total);
        self.overhead = self.total - self.model;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadSummary {
    pub total_ms: f64,
    pub model_ms: f64,
    pub overhead_ms: f64,
    pub overhead_fraction: f64,
}

impl OverheadSummary {
    pub fn from_totals(total_ms: f64, model_ms: f64) -> Self {
        let overhead_ms = total_ms - model_ms;
        let overhead_fraction = if total_ms > 0.0 { overhead_ms / total_ms } else { 0.0 };
        Self {
            total_ms,
            model_ms,
            overhead_ms,
            overhead_fraction,
        }
    }
}

pub fn compute_overhead(trace: &ExecutionTrace) -> OverheadSummary {
    let ms = |d: Duration| d.as_secs_f64() * 1000.0;
    let total_ms = ms(trace.total);
    let overhead_ms = ms(trace.overhead);
    OverheadSummary {
        total_ms,
        model_ms: ms(trace.model),
        overhead_ms,
        overhead_fraction: if total_ms > 0.0 { overhead_ms / total_ms } else { 0.0 },
    }
}
