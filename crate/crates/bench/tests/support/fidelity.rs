//! Randomised checks of rule evaluation and edge admission against a
//! direct re-statement of the two procedures.

use locoml_core::{can_edge_exist, evaluate_rule, Node, NodeKind, Rule, RuleSet};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const KEYS: [&str; 4] = ["a", "b", "c", "kind"];
const VALUES: [&str; 2] = ["x", "y"];
const KINDS: [NodeKind; 7] = [
    NodeKind::Input,
    NodeKind::Asr,
    NodeKind::Mt,
    NodeKind::Tts,
    NodeKind::Ocr,
    NodeKind::Adapter,
    NodeKind::Output,
];

/// Constraint shapes a generated rule can take.
#[derive(Debug, Clone)]
enum Shape {
    Const(bool),
    SameValue(&'static str, &'static str),
    /// Applies only to sources of these kinds; otherwise true.
    Scoped(Vec<NodeKind>, bool),
}

#[derive(Debug, Clone)]
struct Spec {
    src_key: &'static str,
    tgt_key: &'static str,
    shape: Shape,
}

fn lookup<'a>(node: &'a Node, key: &str) -> Option<&'a str> {
    if key == "kind" {
        Some(node.kind.as_str())
    } else {
        node.properties.get(key).map(String::as_str)
    }
}

impl Spec {
    fn constraint(&self, s: &Node, t: &Node) -> bool {
        match &self.shape {
            Shape::Const(v) => *v,
            Shape::SameValue(ks, kt) => lookup(s, ks).is_some() && lookup(s, ks) == lookup(t, kt),
            Shape::Scoped(kinds, v) => !kinds.contains(&s.kind) || *v,
        }
    }

    /// Expected verdict: missing required key gives false, otherwise the constraint.
    fn expected(&self, s: &Node, t: &Node) -> bool {
        lookup(s, self.src_key).is_some() && lookup(t, self.tgt_key).is_some() && self.constraint(s, t)
    }

    fn build(&self, name: String) -> Rule {
        let spec = self.clone();
        Rule::new(name, self.src_key, self.tgt_key, move |s, t| spec.constraint(s, t))
    }
}

fn random_node(rng: &mut StdRng, id: &str) -> Node {
    let mut node = Node::new(id, KINDS[rng.random_range(0..KINDS.len())]);
    for key in &KEYS[..3] {
        if rng.random_bool(0.6) {
            node = node.with_property(*key, VALUES[rng.random_range(0..VALUES.len())]);
        }
    }
    node
}

fn random_spec(rng: &mut StdRng) -> Spec {
    let key = |rng: &mut StdRng| KEYS[rng.random_range(0..KEYS.len())];
    let shape = match rng.random_range(0..3) {
        0 => Shape::Const(rng.random_bool(0.7)),
        1 => Shape::SameValue(key(rng), key(rng)),
        _ => {
            let mut kinds = KINDS.to_vec();
            kinds.shuffle(rng);
            kinds.truncate(rng.random_range(1..4));
            Shape::Scoped(kinds, rng.random_bool(0.5))
        }
    };
    Spec {
        src_key: key(rng),
        tgt_key: key(rng),
        shape,
    }
}

#[derive(Debug, Default)]
pub struct FidelityReport {
    pub cases: usize,
    pub missing_property_cases: usize,
    pub not_applicable_cases: usize,
    pub failures: Vec<String>,
}

/// Runs `cases` random (rule set, source, target) cases from `seed`.
pub fn run(seed: u64, cases: usize) -> FidelityReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut report = FidelityReport::default();
    for case in 0..cases {
        let s = random_node(&mut rng, "s");
        let t = random_node(&mut rng, "t");
        let specs: Vec<Spec> = (0..rng.random_range(0..6)).map(|_| random_spec(&mut rng)).collect();
        let rules: Vec<Rule> = specs
            .iter()
            .enumerate()
            .map(|(i, sp)| sp.build(format!("r{i}")))
            .collect();
        let mut errs: Vec<String> = Vec::new();
        let mut fail = |what: String| errs.push(format!("case {case}: {what}"));

        for (spec, rule) in specs.iter().zip(&rules) {
            let got = evaluate_rule(rule, &s, &t);
            if got != spec.expected(&s, &t) {
                fail(format!("{spec:?} on {s:?} -> {t:?} gave {got}"));
            }
        }

        let set = RuleSet::new(rules.clone()).unwrap();
        let conjunction = specs.iter().all(|sp| sp.expected(&s, &t));
        if can_edge_exist(&s, &t, &set) != conjunction {
            fail(format!("conjunction mismatch for {specs:?}"));
        }

        let mut reversed = rules.clone();
        reversed.reverse();
        if can_edge_exist(&s, &t, &RuleSet::new(reversed).unwrap()) != conjunction {
            fail("rule order changed the verdict".into());
        }

        let extra = random_spec(&mut rng);
        let mut grown = set.clone();
        grown.push(extra.build("extra".into())).unwrap();
        if can_edge_exist(&s, &t, &grown) && !can_edge_exist(&s, &t, &set) {
            fail(format!("adding {extra:?} turned false into true"));
        }

        // Missing required property on either side.
        let missing = Spec {
            src_key: "absent",
            tgt_key: KEYS[case % KEYS.len()],
            shape: Shape::Const(true),
        };
        report.missing_property_cases += 1;
        if evaluate_rule(&missing.build("missing".into()), &s, &t) {
            fail("rule with a missing source property passed".into());
        }
        let missing = Spec {
            src_key: "kind",
            tgt_key: "absent",
            shape: Shape::Const(true),
        };
        if evaluate_rule(&missing.build("missing".into()), &t, &s) {
            fail("rule with a missing target property passed".into());
        }

        // Source outside the rule's scope with keys present.
        let others: Vec<NodeKind> = KINDS.iter().copied().filter(|k| *k != s.kind).collect();
        let scoped = Spec {
            src_key: "kind",
            tgt_key: "kind",
            shape: Shape::Scoped(others, false),
        };
        report.not_applicable_cases += 1;
        if !evaluate_rule(&scoped.build("scoped".into()), &s, &t) {
            fail("not-applicable rule did not default to true".into());
        }

        report.cases += 1;
        report.failures.extend(errs);
    }
    report
}
