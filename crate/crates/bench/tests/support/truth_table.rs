//! Flat truth table for the three compatibility rules, written from the
//! rule descriptions as lookup tables. It shares no code with the rule
//! engine beyond the node builders used to materialise each probe.

use std::collections::HashMap;
use std::sync::Arc;

use locoml_core::{
    bhashini_ruleset, bhashini_ruleset_with_catalog, DataKind, LanguagePair, LanguageSupport, ModelEntry, ModelHub,
    Node, NodeKind, RuleSet,
};

pub const LANGS: [&str; 3] = ["en", "hi", "ta"];

/// Who a model node's `model_ref` points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefState {
    /// Registered, same task, supports the node's languages.
    Good,
    /// Registered, same task, other languages only.
    WrongLang,
    /// Registered under a different task.
    WrongTask,
    /// Not registered.
    Unknown,
}

const REF_STATES: [RefState; 4] = [
    RefState::Good,
    RefState::WrongLang,
    RefState::WrongTask,
    RefState::Unknown,
];

/// Allowed target classes per source class.
const KIND_TABLE: &[(&str, &[&str])] = &[
    ("input:text", &["mt", "tts"]),
    ("input:audio", &["asr"]),
    ("input:image", &["ocr"]),
    ("asr", &["mt", "tts", "adapter", "output"]),
    ("ocr", &["mt", "tts", "adapter", "output"]),
    ("mt", &["mt", "tts", "adapter", "output"]),
    ("tts", &["asr", "adapter", "output"]),
    ("adapter", &["asr", "ocr", "mt", "tts", "adapter", "output"]),
    ("output", &[]),
];

/// (class, emits, accepts); `any` matches everything, `none` nothing.
const PORT_TABLE: &[(&str, &str, &str)] = &[
    ("input:text", "text", "none"),
    ("input:audio", "audio", "none"),
    ("input:image", "image", "none"),
    ("asr", "text", "audio"),
    ("ocr", "text", "image"),
    ("mt", "text", "text"),
    ("tts", "audio", "text"),
    ("adapter:identity", "any", "any"),
    ("adapter:text_cleanup", "text", "text"),
    ("output", "none", "any"),
];

#[derive(Debug, Clone)]
pub struct Probe {
    pub node: Node,
    /// `input:text`, `asr`, `adapter:identity`, ...
    pub class: String,
    pub emits_lang: Option<String>,
    pub needs_lang: Option<String>,
    pub model_ref: Option<RefState>,
}

impl Probe {
    fn kind_class(&self) -> &str {
        self.class
            .split(':')
            .next()
            .filter(|k| *k != "input")
            .unwrap_or(&self.class)
    }

    fn is_model(&self) -> bool {
        self.model_ref.is_some()
    }
}

fn ports(class: &str) -> (&'static str, &'static str) {
    PORT_TABLE
        .iter()
        .find(|(c, _, _)| *c == class)
        .map(|(_, emits, accepts)| (*emits, *accepts))
        .unwrap_or_else(|| panic!("no port row for {class}"))
}

fn port_match(emits: &str, accepts: &str) -> bool {
    match (emits, accepts) {
        ("none", _) | (_, "none") => false,
        ("any", _) | (_, "any") => true,
        (a, b) => a == b,
    }
}

pub fn oracle_kind(s: &Probe, t: &Probe) -> bool {
    let src = if s.class.starts_with("input") {
        s.class.as_str()
    } else {
        s.kind_class()
    };
    KIND_TABLE
        .iter()
        .find(|(c, _)| *c == src)
        .is_some_and(|(_, allowed)| allowed.contains(&t.kind_class()))
}

pub fn oracle_datatype(s: &Probe, t: &Probe) -> bool {
    let applies = s.class.starts_with("input") || s.class.starts_with("adapter") || t.class.starts_with("adapter");
    !applies || port_match(ports(&s.class).0, ports(&t.class).1)
}

pub fn oracle_language(s: &Probe, t: &Probe, with_catalog: bool) -> bool {
    if !t.is_model() {
        return true;
    }
    let langs_agree = match (&s.emits_lang, &t.needs_lang) {
        (Some(out), Some(need)) => out == need,
        (None, Some(_)) => true,
        (_, None) => false,
    };
    langs_agree && (!with_catalog || t.model_ref == Some(RefState::Good))
}

pub fn oracle(s: &Probe, t: &Probe, with_catalog: bool) -> bool {
    oracle_kind(s, t) && oracle_datatype(s, t) && oracle_language(s, t, with_catalog)
}

/// The probe universe plus a hub holding the models its refs point at.
pub struct Universe {
    pub probes: Vec<Probe>,
    pub hub: Arc<ModelHub>,
}

impl Universe {
    pub fn plain_rules(&self) -> RuleSet {
        bhashini_ruleset()
    }

    pub fn catalog_rules(&self) -> RuleSet {
        bhashini_ruleset_with_catalog(self.hub.clone())
    }
}

fn register(hub: &ModelHub, task: NodeKind, name: String, support: LanguageSupport) -> String {
    let entry = ModelEntry::api(name, "1", task, vec![support], "http://127.0.0.1:9");
    hub.register_model(entry).unwrap()
}

pub fn universe() -> Universe {
    let hub = Arc::new(ModelHub::in_memory());
    let single = |l: &str| LanguageSupport::Single(l.to_string());
    let pair = |a: &str, b: &str| LanguageSupport::Pair(LanguagePair::new(a, b));

    let mut good: HashMap<(NodeKind, String), String> = HashMap::new();
    let mut wrong_lang: HashMap<NodeKind, String> = HashMap::new();
    for task in [NodeKind::Asr, NodeKind::Tts, NodeKind::Ocr] {
        for l in LANGS {
            good.insert(
                (task, l.to_string()),
                register(&hub, task, format!("{task}-{l}"), single(l)),
            );
        }
        wrong_lang.insert(task, register(&hub, task, format!("{task}-fr"), single("fr")));
    }
    for a in LANGS {
        for b in LANGS {
            good.insert(
                (NodeKind::Mt, format!("{a}>{b}")),
                register(&hub, NodeKind::Mt, format!("mt-{a}-{b}"), pair(a, b)),
            );
        }
    }
    wrong_lang.insert(
        NodeKind::Mt,
        register(&hub, NodeKind::Mt, "mt-fr-de".into(), pair("fr", "de")),
    );
    // A registered model of another task listing the node's language.
    let other_task = |task: NodeKind, lang: &str| -> String {
        let other = if task == NodeKind::Asr {
            NodeKind::Tts
        } else {
            NodeKind::Asr
        };
        register(&hub, other, format!("{other}-as-{task}-{lang}"), single(lang))
    };

    let mut probes = Vec::new();
    let lang_variants = |with_none: bool| {
        let mut v: Vec<Option<&str>> = if with_none { vec![None] } else { vec![] };
        v.extend(LANGS.iter().map(|l| Some(*l)));
        v
    };
    for (dk, langs) in [
        (DataKind::Text, lang_variants(true)),
        (DataKind::Audio, vec![None, Some("en")]),
        (DataKind::Image, vec![None, Some("en")]),
    ] {
        for lang in langs {
            let mut node = Node::input(format!("in-{dk}-{}", lang.unwrap_or("none")), dk);
            if let Some(l) = lang {
                node = node.with_property("lang", l);
            }
            probes.push(Probe {
                node,
                class: format!("input:{dk}"),
                emits_lang: lang.map(str::to_string),
                needs_lang: None,
                model_ref: None,
            });
        }
    }
    for task in [NodeKind::Asr, NodeKind::Tts, NodeKind::Ocr] {
        for l in LANGS {
            for state in REF_STATES {
                let model = match state {
                    RefState::Good => good[&(task, l.to_string())].clone(),
                    RefState::WrongLang => wrong_lang[&task].clone(),
                    RefState::WrongTask => other_task(task, l),
                    RefState::Unknown => format!("unregistered-{task}-{l}"),
                };
                let id = format!("{task}-{l}-{state:?}");
                let node = match task {
                    NodeKind::Asr => Node::asr(id, l, model),
                    NodeKind::Tts => Node::tts(id, l, model),
                    _ => Node::ocr(id, l, model),
                };
                probes.push(Probe {
                    node,
                    class: task.to_string(),
                    emits_lang: Some(l.to_string()),
                    needs_lang: Some(l.to_string()),
                    model_ref: Some(state),
                });
            }
        }
    }
    for a in LANGS {
        for b in LANGS {
            for state in REF_STATES {
                let key = format!("{a}>{b}");
                let model = match state {
                    RefState::Good => good[&(NodeKind::Mt, key.clone())].clone(),
                    RefState::WrongLang => wrong_lang[&NodeKind::Mt].clone(),
                    RefState::WrongTask => good[&(NodeKind::Asr, a.to_string())].clone(),
                    RefState::Unknown => format!("unregistered-mt-{a}-{b}"),
                };
                probes.push(Probe {
                    node: Node::mt(format!("mt-{a}-{b}-{state:?}"), a, b, model),
                    class: "mt".into(),
                    emits_lang: Some(b.to_string()),
                    needs_lang: Some(a.to_string()),
                    model_ref: Some(state),
                });
            }
        }
    }
    for transform in ["identity", "text_cleanup"] {
        probes.push(Probe {
            node: Node::adapter(format!("adapter-{transform}"), transform),
            class: format!("adapter:{transform}"),
            emits_lang: None,
            needs_lang: None,
            model_ref: None,
        });
    }
    probes.push(Probe {
        node: Node::output("out"),
        class: "output".into(),
        emits_lang: None,
        needs_lang: None,
        model_ref: None,
    });
    Universe { probes, hub }
}

/// Result of comparing the engine with the oracle over every ordered pair.
#[derive(Debug, Default)]
pub struct Comparison {
    pub cases: usize,
    pub accepted: usize,
    pub mismatches: Vec<String>,
}

pub fn compare(universe: &Universe) -> Comparison {
    let mut result = Comparison::default();
    for (rules, with_catalog) in [(universe.plain_rules(), false), (universe.catalog_rules(), true)] {
        for s in &universe.probes {
            for t in &universe.probes {
                let expected = oracle(s, t, with_catalog);
                let actual = rules.can_edge_exist(&s.node, &t.node);
                result.cases += 1;
                result.accepted += usize::from(actual);
                if expected != actual {
                    result.mismatches.push(format!(
                        "{} -> {} (catalog: {with_catalog}): oracle {expected}, engine {actual}",
                        s.node.id, t.node.id
                    ));
                }
            }
        }
    }
    result
}
