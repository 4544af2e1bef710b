//! Deterministic execution of a bigraphical reactive system.

use std::fmt::Write as _;

use serde::Serialize;

use super::{apply, ReactionRule, RewriteError};
use crate::bigraph::Bigraph;
use crate::matching::{find_occurrences, Occurrence};

/// Initial state plus rules grouped into priority classes (earlier class
/// wins). Rules are indexed in definition order.
#[derive(Clone, Debug)]
pub struct BrsSpec {
    pub init: Bigraph,
    pub rules: Vec<ReactionRule>,
    /// Indices into `rules`.
    pub classes: Vec<Vec<usize>>,
}

impl BrsSpec {
    /// Every rule in a single class.
    pub fn single_class(init: Bigraph, rules: Vec<ReactionRule>) -> Self {
        let classes = vec![(0..rules.len()).collect()];
        BrsSpec { init, rules, classes }
    }
}

#[derive(Clone, Debug)]
pub struct Reaction {
    pub state: Bigraph,
    pub rule: usize,
    pub occurrence: Occurrence,
}

/// One reaction from `state`: the first priority class with any match
/// fires its earliest-defined matching rule at its lowest occurrence.
/// `None` when quiescent.
pub fn step(state: &Bigraph, spec: &BrsSpec) -> Result<Option<Reaction>, RewriteError> {
    for class in &spec.classes {
        let mut members = class.clone();
        members.sort_unstable();
        for idx in members {
            let rule = &spec.rules[idx];
            let mut occs = find_occurrences(state, &rule.redex)?;
            if occs.is_empty() {
                continue;
            }
            let occurrence = occs.remove(0);
            let next = apply(state, rule, &occurrence)?;
            return Ok(Some(Reaction { state: next, rule: idx, occurrence }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub hash: String,
    pub index: usize,
    pub occurrence: String,
    pub rule: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Quiescent,
    MaxSteps,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
    pub final_state: Bigraph,
    pub reason: Termination,
}

#[derive(Serialize)]
struct FinalLine<'a> {
    final_hash: &'a str,
    reason: Termination,
}

impl Trace {
    pub fn final_hash(&self) -> String {
        self.final_state.canonical_hash()
    }

    /// JSON lines: one per step, then `{final_hash, reason}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            writeln!(out, "{}", serde_json::to_string(s).expect("step serializes")).unwrap();
        }
        let hash = self.final_hash();
        let last = FinalLine { final_hash: &hash, reason: self.reason };
        writeln!(out, "{}", serde_json::to_string(&last).expect("final line serializes")).unwrap();
        out
    }
}

/// Step from `spec.init` until quiescent or `max_steps` reactions.
pub fn run(spec: &BrsSpec, max_steps: usize) -> Result<Trace, RewriteError> {
    let mut state = spec.init.clone();
    let mut steps = Vec::new();
    loop {
        if steps.len() == max_steps {
            let reason = if step(&state, spec)?.is_some() { Termination::MaxSteps } else { Termination::Quiescent };
            return Ok(Trace { steps, final_state: state, reason });
        }
        match step(&state, spec)? {
            None => return Ok(Trace { steps, final_state: state, reason: Termination::Quiescent }),
            Some(r) => {
                steps.push(StepRecord {
                    hash: r.state.canonical_hash(),
                    index: steps.len(),
                    occurrence: r.occurrence.summary(),
                    rule: spec.rules[r.rule].name.clone(),
                });
                state = r.state;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::{BigraphBuilder, Control, Place, Signature};

    fn sig() -> Signature {
        Signature::from_controls([Control::new("A", 0, false), Control::new("B", 0, false), Control::new("C", 0, false)])
            .unwrap()
    }

    fn atom(ctrl: &str) -> Bigraph {
        let mut b = BigraphBuilder::new(sig());
        let r = b.add_root();
        b.add_node(Place::Root(r), ctrl, None, vec![]).unwrap();
        b.build().unwrap()
    }

    fn rewrite(name: &str, from: &str, to: &str) -> ReactionRule {
        ReactionRule::new(name, atom(from), atom(to), vec![]).unwrap()
    }

    fn state(ctrls: &[&str]) -> Bigraph {
        let mut b = BigraphBuilder::new(sig());
        let r = b.add_root();
        for c in ctrls {
            b.add_node(Place::Root(r), c, None, vec![]).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn quiescent_state_gives_none() {
        let spec = BrsSpec::single_class(state(&["C"]), vec![rewrite("ab", "A", "B")]);
        assert!(step(&spec.init, &spec).unwrap().is_none());
    }

    #[test]
    fn higher_class_fires_first() {
        let rules = vec![rewrite("a_to_c", "A", "C"), rewrite("b_to_c", "B", "C")];
        let spec = BrsSpec { init: state(&["A", "B"]), rules, classes: vec![vec![1], vec![0]] };
        let r = step(&spec.init, &spec).unwrap().unwrap();
        assert_eq!(spec.rules[r.rule].name, "b_to_c");
    }

    #[test]
    fn lowest_occurrence_and_reproducible() {
        let spec = BrsSpec::single_class(state(&["A", "A"]), vec![rewrite("ab", "A", "B")]);
        let first = step(&spec.init, &spec).unwrap().unwrap();
        let ids: Vec<_> = spec.init.node_ids().collect();
        assert_eq!(first.occurrence.key(), vec![ids[0]]);
        let t1 = run(&spec, 10).unwrap();
        let t2 = run(&spec, 10).unwrap();
        assert_eq!(t1.to_jsonl(), t2.to_jsonl());
        assert_eq!(t1.steps.len(), 2);
        assert_eq!(t1.reason, Termination::Quiescent);
    }

    #[test]
    fn zero_steps() {
        let spec = BrsSpec::single_class(state(&["A"]), vec![rewrite("ab", "A", "B")]);
        let t = run(&spec, 0).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.reason, Termination::MaxSteps);
        let spec = BrsSpec::single_class(state(&["C"]), vec![rewrite("ab", "A", "B")]);
        assert_eq!(run(&spec, 0).unwrap().reason, Termination::Quiescent);
    }

    #[test]
    fn non_terminating_rule_hits_bound() {
        let spec = BrsSpec::single_class(state(&["A"]), vec![rewrite("aa", "A", "A")]);
        let t = run(&spec, 5).unwrap();
        assert_eq!(t.steps.len(), 5);
        assert_eq!(t.reason, Termination::MaxSteps);
        assert_eq!(t.steps.iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        let text = t.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("{\"final_hash\":"));
        assert!(lines[5].ends_with("\"reason\":\"max_steps\"}"));
    }
}
