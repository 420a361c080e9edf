//! Pipeline graph model.
//!
//! A [`PipelineGraph`] is a set of typed [`Node`]s joined by directed
//! [`Edge`]s. Graphs are values: [`PipelineGraph::add_node`] and
//! [`PipelineGraph::add_edge`] return a new graph and leave the receiver
//! untouched, so a rejected mutation can never leave a half-applied edit
//! behind and a graph can be shared read-only across executions.
//!
//! Mutation-time checks keep graphs built through the builder API valid.
//! Graphs that arrive as JSON skip those checks, which is why
//! [`validate_pipeline`] re-derives every invariant from scratch.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::RuleSet;

/// Data carried on a node port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Text,
    Audio,
    Image,
}

impl DataKind {
    pub const ALL: [DataKind; 3] = [DataKind::Text, DataKind::Audio, DataKind::Image];

    pub fn as_str(self) -> &'static str {
        match self {
            DataKind::Text => "text",
            DataKind::Audio => "audio",
            DataKind::Image => "image",
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(DataKind::Text),
            "audio" => Ok(DataKind::Audio),
            "image" => Ok(DataKind::Image),
            other => Err(GraphError::UnknownDataKind(other.to_string())),
        }
    }
}

/// What a node does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Asr,
    Mt,
    Tts,
    Ocr,
    Adapter,
    Output,
}

impl NodeKind {
    pub const ALL: [NodeKind; 7] = [
        NodeKind::Input,
        NodeKind::Asr,
        NodeKind::Mt,
        NodeKind::Tts,
        NodeKind::Ocr,
        NodeKind::Adapter,
        NodeKind::Output,
    ];

    pub const MODELS: [NodeKind; 4] = [NodeKind::Asr, NodeKind::Mt, NodeKind::Tts, NodeKind::Ocr];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Input => "input",
            NodeKind::Asr => "asr",
            NodeKind::Mt => "mt",
            NodeKind::Tts => "tts",
            NodeKind::Ocr => "ocr",
            NodeKind::Adapter => "adapter",
            NodeKind::Output => "output",
        }
    }

    /// True for the kinds backed by a Model Hub entry.
    pub fn is_model(self) -> bool {
        matches!(self, NodeKind::Asr | NodeKind::Mt | NodeKind::Tts | NodeKind::Ocr)
    }

    /// Fixed port kinds of a model task, `(input, output)`.
    pub fn model_ports(self) -> Option<(DataKind, DataKind)> {
        match self {
            NodeKind::Asr => Some((DataKind::Audio, DataKind::Text)),
            NodeKind::Mt => Some((DataKind::Text, DataKind::Text)),
            NodeKind::Tts => Some((DataKind::Text, DataKind::Audio)),
            NodeKind::Ocr => Some((DataKind::Image, DataKind::Text)),
            _ => None,
        }
    }

    /// Property keys a node of this kind must carry.
    pub fn required_properties(self) -> &'static [&'static str] {
        match self {
            NodeKind::Asr | NodeKind::Tts | NodeKind::Ocr => &["lang"],
            NodeKind::Mt => &["source_lang", "target_lang"],
            NodeKind::Input => &["data_kind", "source"],
            NodeKind::Adapter => &["transform"],
            NodeKind::Output => &[],
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GraphError::UnknownKind(s.to_string()))
    }
}

/// Adapter transforms known to the executor.
pub const ADAPTER_TRANSFORMS: [&str; 2] = ["identity", "text_cleanup"];

/// One processing step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
    #[serde(default)]
    pub model_ref: Option<String>,
    /// Assigned by [`PipelineGraph::add_node`]; any value set by the caller
    /// is overwritten.
    #[serde(default)]
    pub insertion_index: u64,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self {
            id: id.into(),
            kind,
            properties: BTreeMap::new(),
            model_ref: None,
            insertion_index: 0,
        }
    }

    pub fn with_property(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn with_model(mut self, model_ref: impl Into<String>) -> Self {
        self.model_ref = Some(model_ref.into());
        self
    }

    /// Input node for `data_kind`, fed by an upload.
    pub fn input(id: impl Into<String>, data_kind: DataKind) -> Self {
        Node::new(id, NodeKind::Input)
            .with_property("data_kind", data_kind.as_str())
            .with_property("source", "upload")
    }

    pub fn asr(id: impl Into<String>, lang: &str, model_ref: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Asr)
            .with_property("lang", lang)
            .with_model(model_ref)
    }

    pub fn tts(id: impl Into<String>, lang: &str, model_ref: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Tts)
            .with_property("lang", lang)
            .with_model(model_ref)
    }

    pub fn ocr(id: impl Into<String>, lang: &str, model_ref: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Ocr)
            .with_property("lang", lang)
            .with_model(model_ref)
    }

    pub fn mt(id: impl Into<String>, source_lang: &str, target_lang: &str, model_ref: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Mt)
            .with_property("source_lang", source_lang)
            .with_property("target_lang", target_lang)
            .with_model(model_ref)
    }

    pub fn adapter(id: impl Into<String>, transform: &str) -> Self {
        Node::new(id, NodeKind::Adapter).with_property("transform", transform)
    }

    pub fn output(id: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Output)
    }

    /// Looks up a property by key. `kind` and `model_ref` resolve to the
    /// node's own fields so rules can require them like any other key.
    pub fn property(&self, key: &str) -> Option<&str> {
        match key {
            "kind" => Some(self.kind.as_str()),
            "model_ref" => self.model_ref.as_deref(),
            _ => self.properties.get(key).map(String::as_str),
        }
    }

    /// Declared data kind of an input node.
    pub fn data_kind(&self) -> Option<DataKind> {
        self.properties.get("data_kind")?.parse().ok()
    }

    /// Checks the per-kind property table and the model_ref rule.
    pub fn check(&self) -> Result<(), GraphError> {
        for key in self.kind.required_properties() {
            if !self.properties.contains_key(*key) {
                return Err(GraphError::MissingRequiredProperty {
                    node_id: self.id.clone(),
                    key: (*key).to_string(),
                });
            }
        }
        match self.kind {
            NodeKind::Input => {
                let data_kind = &self.properties["data_kind"];
                if data_kind.parse::<DataKind>().is_err() {
                    return Err(self.invalid("data_kind", data_kind));
                }
                let source = &self.properties["source"];
                if source != "upload" && url::Url::parse(source).is_err() {
                    return Err(self.invalid("source", source));
                }
            }
            NodeKind::Adapter => {
                let transform = &self.properties["transform"];
                if !ADAPTER_TRANSFORMS.contains(&transform.as_str()) {
                    return Err(self.invalid("transform", transform));
                }
            }
            _ => {
                for key in self.kind.required_properties() {
                    if self.properties[*key].is_empty() {
                        return Err(self.invalid(key, ""));
                    }
                }
            }
        }
        match (self.kind.is_model(), self.model_ref.as_deref()) {
            (true, None) | (true, Some("")) => Err(GraphError::MissingModelRef(self.id.clone())),
            (false, Some(_)) => Err(GraphError::UnexpectedModelRef(self.id.clone())),
            _ => Ok(()),
        }
    }

    fn invalid(&self, key: &str, value: &str) -> GraphError {
        GraphError::InvalidProperty {
            node_id: self.id.clone(),
            key: key.to_string(),
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
}

/// Structural reason an edge cannot be added, independent of the rule set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralCause {
    SelfLoop,
    DuplicateEdge,
    CycleIntroduced,
}

impl StructuralCause {
    pub fn code(self) -> &'static str {
        match self {
            StructuralCause::SelfLoop => "self-loop",
            StructuralCause::DuplicateEdge => "duplicate-edge",
            StructuralCause::CycleIntroduced => "cycle-introduced",
        }
    }
}

/// Why a candidate edge was refused: every failed rule plus the structural
/// cause, if there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRejection {
    pub source: String,
    pub target: String,
    pub structural: Option<StructuralCause>,
    pub failed_rules: Vec<String>,
}

impl EdgeRejection {
    /// Rule names followed by the structural code, as reported to clients.
    pub fn reasons(&self) -> Vec<String> {
        let mut reasons = self.failed_rules.clone();
        if let Some(cause) = self.structural {
            reasons.push(cause.code().to_string());
        }
        reasons
    }
}

impl fmt::Display for EdgeRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "edge {} -> {} rejected: {}",
            self.source,
            self.target,
            self.reasons().join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{node_id}` is missing required property `{key}`")]
    MissingRequiredProperty { node_id: String, key: String },
    #[error("node `{node_id}` has invalid {key} `{value}`")]
    InvalidProperty {
        node_id: String,
        key: String,
        value: String,
    },
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error("unknown data kind `{0}`")]
    UnknownDataKind(String),
    #[error("model node `{0}` has no model_ref")]
    MissingModelRef(String),
    #[error("non-model node `{0}` must not carry a model_ref")]
    UnexpectedModelRef(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{0}")]
    EdgeRejected(EdgeRejection),
    #[error("cycle detected among nodes {0:?}")]
    CycleDetected(Vec<String>),
}

impl GraphError {
    /// Machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::DuplicateId(_) => "duplicate-id",
            GraphError::MissingRequiredProperty { .. } => "missing-required-property",
            GraphError::InvalidProperty { .. } => "invalid-property",
            GraphError::UnknownKind(_) => "unknown-kind",
            GraphError::UnknownDataKind(_) => "unknown-data-kind",
            GraphError::MissingModelRef(_) => "missing-model-ref",
            GraphError::UnexpectedModelRef(_) => "unexpected-model-ref",
            GraphError::UnknownNode(_) => "unknown-node",
            GraphError::EdgeRejected(r) => match (r.structural, r.failed_rules.is_empty()) {
                (Some(cause), true) => cause.code(),
                _ => "rule-violation",
            },
            GraphError::CycleDetected(_) => "cycle-detected",
        }
    }
}

/// A pipeline: nodes `N` and directed edges `E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub id: String,
    pub name: String,
    #[serde(default)]
    nodes: Vec<Node>,
    #[serde(default)]
    edges: Vec<Edge>,
}

impl PipelineGraph {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Assembles a graph without any checks. Use [`validate_pipeline`] on
    /// the result before trusting it.
    pub fn from_parts(id: impl Into<String>, name: impl Into<String>, nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            nodes,
            edges,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains_edge(&self, source: &str, target: &str) -> bool {
        self.edges.iter().any(|e| e.source == source && e.target == target)
    }

    /// Ids of the direct predecessors of `id`.
    pub fn predecessors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.target == id)
            .map(|e| e.source.as_str())
    }

    pub fn successors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.source == id)
            .map(|e| e.target.as_str())
    }

    fn next_insertion_index(&self) -> u64 {
        self.nodes.iter().map(|n| n.insertion_index + 1).max().unwrap_or(0)
    }

    /// Returns a copy of the graph with `node` appended under the next
    /// insertion index.
    pub fn add_node(&self, mut node: Node) -> Result<Self, GraphError> {
        if self.node(&node.id).is_some() {
            return Err(GraphError::DuplicateId(node.id));
        }
        node.check()?;
        node.insertion_index = self.next_insertion_index();
        let mut next = self.clone();
        next.nodes.push(node);
        Ok(next)
    }

    /// Returns a copy of the graph with the edge `source -> target`, or the
    /// full list of reasons it cannot exist. `self` is never modified.
    pub fn add_edge(&self, source: &str, target: &str, rules: &RuleSet) -> Result<Self, GraphError> {
        let rejection = self.check_edge(source, target, rules)?;
        if let Some(rejection) = rejection {
            return Err(GraphError::EdgeRejected(rejection));
        }
        let mut next = self.clone();
        next.edges.push(Edge {
            source: source.to_string(),
            target: target.to_string(),
        });
        Ok(next)
    }

    /// Evaluates a candidate edge without adding it. `Ok(None)` means the
    /// edge is acceptable.
    pub fn check_edge(&self, source: &str, target: &str, rules: &RuleSet) -> Result<Option<EdgeRejection>, GraphError> {
        let src = self
            .node(source)
            .ok_or_else(|| GraphError::UnknownNode(source.to_string()))?;
        let tgt = self
            .node(target)
            .ok_or_else(|| GraphError::UnknownNode(target.to_string()))?;

        let structural = if source == target {
            Some(StructuralCause::SelfLoop)
        } else if self.contains_edge(source, target) {
            Some(StructuralCause::DuplicateEdge)
        } else if self.reaches(target, source) {
            Some(StructuralCause::CycleIntroduced)
        } else {
            None
        };
        let failed_rules: Vec<String> = rules.failed_rules(src, tgt).into_iter().map(str::to_string).collect();

        if structural.is_none() && failed_rules.is_empty() {
            Ok(None)
        } else {
            Ok(Some(EdgeRejection {
                source: source.to_string(),
                target: target.to_string(),
                structural,
                failed_rules,
            }))
        }
    }

    /// True if `to` is reachable from `from` along existing edges.
    fn reaches(&self, from: &str, to: &str) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            if id == to {
                return true;
            }
            if seen.insert(id) {
                stack.extend(self.successors(id));
            }
        }
        false
    }

    /// Node ids in execution order.
    ///
    /// Kahn's algorithm; among ready nodes the lowest insertion index runs
    /// first (node id breaks ties between equal indices). Edges naming
    /// unknown nodes are ignored here and reported by [`validate_pipeline`].
    pub fn topological_order(&self) -> Result<Vec<String>, GraphError> {
        let position: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut seen_edges = HashSet::new();
        for edge in &self.edges {
            let (Some(&s), Some(&t)) = (position.get(edge.source.as_str()), position.get(edge.target.as_str())) else {
                continue;
            };
            if !seen_edges.insert((s, t)) {
                continue;
            }
            outgoing[s].push(t);
            indegree[t] += 1;
        }

        let key = |i: usize| Reverse((self.nodes[i].insertion_index, self.nodes[i].id.as_str(), i));
        let mut ready: BinaryHeap<_> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).map(key).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse((_, _, i))) = ready.pop() {
            order.push(self.nodes[i].id.clone());
            for &t in &outgoing[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.push(key(t));
                }
            }
        }

        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            let stuck = (0..self.nodes.len())
                .filter(|&i| indegree[i] > 0)
                .map(|i| self.nodes[i].id.clone())
                .collect();
            Err(GraphError::CycleDetected(stuck))
        }
    }
}

/// Free-function form of [`PipelineGraph::topological_order`].
pub fn topological_order(pipeline: &PipelineGraph) -> Result<Vec<String>, GraphError> {
    pipeline.topological_order()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub node_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_name: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

fn violation(code: &str, node_ids: Vec<String>, message: String) -> Violation {
    Violation {
        code: code.to_string(),
        node_ids,
        rule_name: None,
        message,
    }
}

/// Re-checks every pipeline invariant and reports all findings at once.
pub fn validate_pipeline(pipeline: &PipelineGraph, rules: &RuleSet) -> ValidationReport {
    let mut violations = Vec::new();

    let mut ids = HashSet::new();
    for node in &pipeline.nodes {
        if !ids.insert(node.id.as_str()) {
            violations.push(violation(
                "duplicate-node",
                vec![node.id.clone()],
                format!("node id `{}` appears more than once", node.id),
            ));
        }
        if let Err(err) = node.check() {
            violations.push(violation("invalid-node", vec![node.id.clone()], err.to_string()));
        }
    }

    let mut seen_edges = HashSet::new();
    let mut checkable = Vec::new();
    for edge in &pipeline.edges {
        let ends = vec![edge.source.clone(), edge.target.clone()];
        if !ids.contains(edge.source.as_str()) || !ids.contains(edge.target.as_str()) {
            violations.push(violation(
                "dangling-edge",
                ends,
                format!("edge {} -> {} names an unknown node", edge.source, edge.target),
            ));
        } else if edge.source == edge.target {
            violations.push(violation(
                "self-loop",
                ends,
                format!("edge {0} -> {0} is a self-loop", edge.source),
            ));
        } else if !seen_edges.insert((edge.source.as_str(), edge.target.as_str())) {
            violations.push(violation(
                "duplicate-edge",
                ends,
                format!("edge {} -> {} appears more than once", edge.source, edge.target),
            ));
        } else {
            checkable.push(edge);
        }
    }

    let inputs: Vec<&Node> = pipeline.nodes.iter().filter(|n| n.kind == NodeKind::Input).collect();
    match inputs.len() {
        0 => violations.push(violation(
            "missing-input",
            vec![],
            "pipeline has no input node".to_string(),
        )),
        1 => {}
        n => violations.push(violation(
            "multiple-inputs",
            inputs.iter().map(|n| n.id.clone()).collect(),
            format!("pipeline has {n} input nodes; exactly one is allowed"),
        )),
    }

    if let Err(GraphError::CycleDetected(stuck)) = pipeline.topological_order() {
        violations.push(violation("cycle", stuck, "pipeline graph contains a cycle".to_string()));
    }

    if let [input] = inputs.as_slice() {
        let reachable = reachable_from(pipeline, &input.id);
        for node in &pipeline.nodes {
            if node.kind != NodeKind::Input && !reachable.contains(node.id.as_str()) {
                violations.push(violation(
                    "unreachable-node",
                    vec![node.id.clone()],
                    format!("node `{}` has no path from input node `{}`", node.id, input.id),
                ));
            }
        }
    }

    for edge in checkable {
        let (Some(src), Some(tgt)) = (pipeline.node(&edge.source), pipeline.node(&edge.target)) else {
            continue;
        };
        for rule in rules.failed_rules(src, tgt) {
            violations.push(Violation {
                code: "rule-violation".to_string(),
                node_ids: vec![edge.source.clone(), edge.target.clone()],
                rule_name: Some(rule.to_string()),
                message: format!("edge {} -> {} fails rule {rule}", edge.source, edge.target),
            });
        }
    }

    ValidationReport::from_violations(violations)
}

fn reachable_from<'a>(pipeline: &'a PipelineGraph, start: &'a str) -> HashSet<&'a str> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(id) = queue.pop_front() {
        for next in pipeline.successors(id) {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{bhashini_ruleset, Rule};

    fn empty_rules() -> RuleSet {
        RuleSet::default()
    }

    fn add(g: PipelineGraph, n: Node) -> PipelineGraph {
        g.add_node(n).unwrap()
    }

    #[test]
    fn add_input_to_empty_pipeline() {
        let g = PipelineGraph::new("p", "p")
            .add_node(Node::input("in", DataKind::Text))
            .unwrap();
        assert_eq!(g.nodes().len(), 1);
        assert!(g.edges().is_empty());
        assert_eq!(g.nodes()[0].insertion_index, 0);
    }

    #[test]
    fn duplicate_id_rejected() {
        let g = add(PipelineGraph::new("p", "p"), Node::input("in", DataKind::Text));
        let err = g.add_node(Node::output("in")).unwrap_err();
        assert_eq!(err, GraphError::DuplicateId("in".into()));
        assert_eq!(err.code(), "duplicate-id");
    }

    #[test]
    fn missing_required_property_is_named() {
        let node = Node::new("m", NodeKind::Mt)
            .with_property("source_lang", "en")
            .with_model("x");
        let err = PipelineGraph::new("p", "p").add_node(node).unwrap_err();
        assert_eq!(
            err,
            GraphError::MissingRequiredProperty {
                node_id: "m".into(),
                key: "target_lang".into()
            }
        );
    }

    #[test]
    fn unknown_kind_from_str() {
        assert_eq!("vision".parse::<NodeKind>().unwrap_err().code(), "unknown-kind");
        let doc = r#"{"id":"x","kind":"vision","properties":{},"model_ref":null,"insertion_index":0}"#;
        assert!(serde_json::from_str::<Node>(doc).is_err());
    }

    #[test]
    fn model_ref_iff_model_kind() {
        let g = PipelineGraph::new("p", "p");
        assert_eq!(
            g.add_node(Node::new("a", NodeKind::Asr).with_property("lang", "en"))
                .unwrap_err(),
            GraphError::MissingModelRef("a".into())
        );
        assert_eq!(
            g.add_node(Node::output("o").with_model("m")).unwrap_err(),
            GraphError::UnexpectedModelRef("o".into())
        );
    }

    #[test]
    fn input_source_must_be_upload_or_url() {
        let g = PipelineGraph::new("p", "p");
        let ok = Node::input("in", DataKind::Audio).with_property("source", "https://example.org/data.zip");
        assert!(g.add_node(ok).is_ok());
        let bad = Node::input("in", DataKind::Audio).with_property("source", "somewhere");
        assert_eq!(g.add_node(bad).unwrap_err().code(), "invalid-property");
    }

    #[test]
    fn insertion_index_strictly_increases() {
        let mut g = PipelineGraph::new("p", "p");
        for i in 0..5 {
            g = add(g, Node::output(format!("o{i}")));
        }
        let idx: Vec<u64> = g.nodes().iter().map(|n| n.insertion_index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn reverse_edge_introduces_cycle() {
        let mut g = PipelineGraph::new("p", "p");
        g = add(g, Node::adapter("a", "identity"));
        g = add(g, Node::adapter("b", "identity"));
        let g = g.add_edge("a", "b", &empty_rules()).unwrap();
        let err = g.add_edge("b", "a", &empty_rules()).unwrap_err();
        assert_eq!(err.code(), "cycle-introduced");
    }

    #[test]
    fn unknown_node_edge() {
        let g = add(PipelineGraph::new("p", "p"), Node::output("o"));
        assert_eq!(
            g.add_edge("o", "ghost", &empty_rules()).unwrap_err(),
            GraphError::UnknownNode("ghost".into())
        );
    }

    #[test]
    fn rejection_lists_rules_and_structure() {
        let never = Rule::new("never", "kind", "kind", |_, _| false);
        let rules = RuleSet::new(vec![never]).unwrap();
        let g = add(PipelineGraph::new("p", "p"), Node::output("o"));
        let GraphError::EdgeRejected(r) = g.add_edge("o", "o", &rules).unwrap_err() else {
            panic!("expected rejection");
        };
        assert_eq!(r.structural, Some(StructuralCause::SelfLoop));
        assert_eq!(r.failed_rules, vec!["never".to_string()]);
        assert_eq!(r.reasons(), vec!["never".to_string(), "self-loop".to_string()]);
    }

    #[test]
    fn chain_order() {
        let rules = bhashini_ruleset();
        let mut g = PipelineGraph::new("p", "p");
        g = add(g, Node::input("in", DataKind::Text));
        g = add(g, Node::mt("m1", "en", "hi", "x"));
        g = add(g, Node::mt("m2", "hi", "ta", "x"));
        let g = g
            .add_edge("in", "m1", &rules)
            .unwrap()
            .add_edge("m1", "m2", &rules)
            .unwrap();
        assert_eq!(g.topological_order().unwrap(), vec!["in", "m1", "m2"]);
    }

    #[test]
    fn two_node_cycle_detected() {
        let g = PipelineGraph::from_parts(
            "p",
            "p",
            vec![Node::output("a"), Node::output("b")],
            vec![
                Edge {
                    source: "a".into(),
                    target: "b".into(),
                },
                Edge {
                    source: "b".into(),
                    target: "a".into(),
                },
            ],
        );
        assert!(matches!(g.topological_order(), Err(GraphError::CycleDetected(_))));
    }

    #[test]
    fn zero_inputs_reported() {
        let g = add(PipelineGraph::new("p", "p"), Node::output("o"));
        let report = validate_pipeline(&g, &bhashini_ruleset());
        assert!(!report.ok);
        assert!(report.has_code("missing-input"));
    }

    #[test]
    fn multiple_inputs_reported() {
        let g = PipelineGraph::new("p", "p");
        let g = add(
            add(g, Node::input("a", DataKind::Text)),
            Node::input("b", DataKind::Audio),
        );
        assert!(validate_pipeline(&g, &empty_rules()).has_code("multiple-inputs"));
    }

    #[test]
    fn valid_chain_validates() {
        let rules = bhashini_ruleset();
        let mut g = PipelineGraph::new("p", "p");
        g = add(g, Node::input("in", DataKind::Audio));
        g = add(g, Node::asr("asr", "en", "m-asr"));
        g = add(g, Node::mt("mt", "en", "hi", "m-mt"));
        let g = g
            .add_edge("in", "asr", &rules)
            .unwrap()
            .add_edge("asr", "mt", &rules)
            .unwrap();
        let report = validate_pipeline(&g, &rules);
        assert!(report.ok, "{report:?}");
        assert!(report.violations.is_empty());
    }

    #[test]
    fn json_pipeline_with_bad_edges_reports_everything() {
        let doc = r#"{"id":"p","name":"p","nodes":[
            {"id":"in","kind":"input","properties":{"data_kind":"text","source":"upload"},"model_ref":null,"insertion_index":0},
            {"id":"o","kind":"output","properties":{},"model_ref":null,"insertion_index":1}],
            "edges":[{"source":"in","target":"ghost"},{"source":"o","target":"o"}]}"#;
        let g: PipelineGraph = serde_json::from_str(doc).unwrap();
        let report = validate_pipeline(&g, &empty_rules());
        for code in ["dangling-edge", "self-loop", "unreachable-node"] {
            assert!(report.has_code(code), "missing {code} in {report:?}");
        }
    }
}
