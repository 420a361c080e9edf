//! Per-edge rule report for a pipeline document.

use locoml_core::{PipelineGraph, RuleSet};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeCheck {
    pub source: String,
    pub target: String,
    /// Failed rule names followed by any structural code.
    pub failed: Vec<String>,
}

impl EdgeCheck {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Re-checks every stored edge against `rules` as if it were being added to
/// the graph without it.
pub fn check_edges(graph: &PipelineGraph, rules: &RuleSet) -> Vec<EdgeCheck> {
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, edge)| {
            let mut rest = graph.edges().to_vec();
            rest.remove(i);
            let without = PipelineGraph::from_parts(&graph.id, &graph.name, graph.nodes().to_vec(), rest);
            let failed = match without.check_edge(&edge.source, &edge.target, rules) {
                Ok(None) => Vec::new(),
                Ok(Some(rejection)) => rejection.reasons(),
                Err(e) => vec![e.code().to_string()],
            };
            EdgeCheck {
                source: edge.source.clone(),
                target: edge.target.clone(),
                failed,
            }
        })
        .collect()
}
