//! Edge rules.
//!
//! A [`Rule`] names one property on each endpoint of a candidate edge and a
//! constraint over the two nodes. If either property is missing the rule
//! fails outright; otherwise the constraint decides. Constraints that do not
//! apply to a given pair of node kinds return `true`, so a [`RuleSet`] can be
//! evaluated as a plain conjunction.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DataKind, Node, NodeKind};

pub type Constraint = Arc<dyn Fn(&Node, &Node) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Rule {
    name: String,
    source_property: String,
    target_property: String,
    constraint: Constraint,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        source_property: impl Into<String>,
        target_property: impl Into<String>,
        constraint: impl Fn(&Node, &Node) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            source_property: source_property.into(),
            target_property: target_property.into(),
            constraint: Arc::new(constraint),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_property(&self) -> &str {
        &self.source_property
    }

    pub fn target_property(&self) -> &str {
        &self.target_property
    }

    pub fn evaluate(&self, source: &Node, target: &Node) -> bool {
        if source.property(&self.source_property).is_some() && target.property(&self.target_property).is_some() {
            (self.constraint)(source, target)
        } else {
            false
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule")
            .field("name", &self.name)
            .field("source_property", &self.source_property)
            .field("target_property", &self.target_property)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleSetError {
    #[error("duplicate rule name `{0}`")]
    DuplicateName(String),
}

/// Ordered collection of uniquely named rules.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, RuleSetError> {
        let mut set = RuleSet::default();
        for rule in rules {
            set.push(rule)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, rule: Rule) -> Result<(), RuleSetError> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(RuleSetError::DuplicateName(rule.name));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Stops at the first failing rule.
    pub fn can_edge_exist(&self, source: &Node, target: &Node) -> bool {
        for rule in &self.rules {
            if !rule.evaluate(source, target) {
                return false;
            }
        }
        true
    }

    /// Names of every rule the pair fails, in rule-set order.
    pub fn failed_rules(&self, source: &Node, target: &Node) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| !r.evaluate(source, target))
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn names(&self) -> HashSet<&str> {
        self.rules.iter().map(|r| r.name.as_str()).collect()
    }
}

pub fn evaluate_rule(rule: &Rule, source: &Node, target: &Node) -> bool {
    rule.evaluate(source, target)
}

pub fn can_edge_exist(source: &Node, target: &Node, rules: &RuleSet) -> bool {
    rules.can_edge_exist(source, target)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LanguagePair {
    pub source_lang: String,
    pub target_lang: String,
}

impl LanguagePair {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        Self {
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.source_lang.is_empty() && !self.target_lang.is_empty()
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source_lang, self.target_lang)
    }
}

/// One language capability of a model: a translation pair for MT, a single
/// tag for the other tasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LanguageSupport {
    Pair(LanguagePair),
    Single(String),
}

impl LanguageSupport {
    /// The language capability a model node asks of its model.
    pub fn declared_by(node: &Node) -> Option<LanguageSupport> {
        match node.kind {
            NodeKind::Mt => Some(LanguageSupport::Pair(LanguagePair::new(
                node.properties.get("source_lang")?.clone(),
                node.properties.get("target_lang")?.clone(),
            ))),
            NodeKind::Asr | NodeKind::Tts | NodeKind::Ocr => {
                Some(LanguageSupport::Single(node.properties.get("lang")?.clone()))
            }
            _ => None,
        }
    }
}

/// What the language rule needs to know about a hub entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSupport {
    pub task: NodeKind,
    pub languages: Vec<LanguageSupport>,
}

/// Read access to model capabilities, implemented by the model hub.
pub trait ModelCatalog: Send + Sync {
    fn model_support(&self, model_ref: &str) -> Option<ModelSupport>;
}

pub const KIND_COMPATIBILITY: &str = "kind-compatibility";
pub const DATATYPE_COMPATIBILITY: &str = "datatype-compatibility";
pub const LANGUAGE_COMPATIBILITY: &str = "language-compatibility";

/// Port typing of a node side: a fixed kind, any kind, or no port at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Port {
    Fixed(DataKind),
    Any,
    Closed,
}

fn output_port(node: &Node) -> Port {
    match node.kind {
        NodeKind::Input => node.data_kind().map_or(Port::Closed, Port::Fixed),
        NodeKind::Adapter => match node.properties.get("transform").map(String::as_str) {
            Some("identity") => Port::Any,
            Some("text_cleanup") => Port::Fixed(DataKind::Text),
            _ => Port::Closed,
        },
        NodeKind::Output => Port::Closed,
        model => Port::Fixed(model.model_ports().expect("model kind").1),
    }
}

fn input_port(node: &Node) -> Port {
    match node.kind {
        NodeKind::Input => Port::Closed,
        NodeKind::Adapter => match node.properties.get("transform").map(String::as_str) {
            Some("identity") => Port::Any,
            Some("text_cleanup") => Port::Fixed(DataKind::Text),
            _ => Port::Closed,
        },
        NodeKind::Output => Port::Any,
        model => Port::Fixed(model.model_ports().expect("model kind").0),
    }
}

fn kind_compatible(source: &Node, target: &Node) -> bool {
    use NodeKind::*;
    match (source.kind, target.kind) {
        (Asr | Ocr | Mt, Mt | Tts) => true,
        (Tts, Asr) => true,
        (Input, t) if t.is_model() => source.data_kind() == t.model_ports().map(|(input, _)| input),
        (Adapter, t) => t != Input,
        (s, Adapter | Output) => s.is_model(),
        _ => false,
    }
}

fn datatype_compatible(source: &Node, target: &Node) -> bool {
    // Model-to-model port kinds are fixed and already covered by the kind
    // table; this rule only looks at edges touching declared ports.
    let applies = matches!(source.kind, NodeKind::Input | NodeKind::Adapter) || target.kind == NodeKind::Adapter;
    if !applies {
        return true;
    }
    match (output_port(source), input_port(target)) {
        (Port::Closed, _) | (_, Port::Closed) => false,
        (Port::Any, _) | (_, Port::Any) => true,
        (Port::Fixed(out), Port::Fixed(inp)) => out == inp,
    }
}

/// Language of the data a node emits, when it is knowable from the node.
pub fn effective_output_language(node: &Node) -> Option<&str> {
    let key = match node.kind {
        NodeKind::Asr | NodeKind::Tts | NodeKind::Ocr | NodeKind::Input => "lang",
        NodeKind::Mt => "target_lang",
        NodeKind::Adapter | NodeKind::Output => return None,
    };
    node.properties.get(key).map(String::as_str)
}

/// Language a model node expects on its input.
pub fn required_input_language(node: &Node) -> Option<&str> {
    let key = match node.kind {
        NodeKind::Asr | NodeKind::Tts | NodeKind::Ocr => "lang",
        NodeKind::Mt => "source_lang",
        _ => return None,
    };
    node.properties.get(key).map(String::as_str)
}

fn language_compatible(source: &Node, target: &Node, catalog: Option<&dyn ModelCatalog>) -> bool {
    if !target.kind.is_model() {
        return true;
    }
    let Some(required) = required_input_language(target) else {
        return false;
    };
    if let Some(produced) = effective_output_language(source) {
        if produced != required {
            return false;
        }
    }
    match catalog {
        None => true,
        Some(catalog) => {
            let Some(declared) = LanguageSupport::declared_by(target) else {
                return false;
            };
            target
                .model_ref
                .as_deref()
                .and_then(|r| catalog.model_support(r))
                .is_some_and(|support| support.task == target.kind && support.languages.contains(&declared))
        }
    }
}

fn bhashini_rules(catalog: Option<Arc<dyn ModelCatalog>>) -> RuleSet {
    let rules = vec![
        Rule::new(KIND_COMPATIBILITY, "kind", "kind", kind_compatible),
        Rule::new(DATATYPE_COMPATIBILITY, "kind", "kind", datatype_compatible),
        Rule::new(LANGUAGE_COMPATIBILITY, "kind", "kind", move |s, t| {
            language_compatible(s, t, catalog.as_deref())
        }),
    ];
    RuleSet::new(rules).expect("rule names are distinct")
}

/// Kind, datatype and language compatibility rules. Without a catalog the
/// language rule checks language agreement between the endpoints but cannot
/// check what the target's model supports.
pub fn bhashini_ruleset() -> RuleSet {
    bhashini_rules(None)
}

/// [`bhashini_ruleset`] with the language rule also requiring the target's
/// model to exist in `catalog`, serve the node's task and support the
/// node's declared languages.
pub fn bhashini_ruleset_with_catalog(catalog: Arc<dyn ModelCatalog>) -> RuleSet {
    bhashini_rules(Some(catalog))
}
