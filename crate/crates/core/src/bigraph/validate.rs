use std::collections::BTreeSet;
use std::fmt;

use super::{Bigraph, Child, Control, LinkTarget, Place};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    InvalidControlName,
    UnknownControl,
    ArityMismatch,
    AtomicHasChildren,
    MissingParent,
    DanglingParent,
    NotAForest,
    UnknownLink,
    SiteOutOfRange,
    InnerNameMismatch,
    StaleIdCounter,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::InvalidControlName => "invalid control name",
            ViolationKind::UnknownControl => "unknown control",
            ViolationKind::ArityMismatch => "arity mismatch",
            ViolationKind::AtomicHasChildren => "atomic node has children",
            ViolationKind::MissingParent => "missing parent",
            ViolationKind::DanglingParent => "dangling parent",
            ViolationKind::NotAForest => "not a forest",
            ViolationKind::UnknownLink => "unknown link",
            ViolationKind::SiteOutOfRange => "site out of range",
            ViolationKind::InnerNameMismatch => "inner name mismatch",
            ViolationKind::StaleIdCounter => "stale id counter",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The offending id or name.
    pub subject: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind, self.subject)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn push(&mut self, kind: ViolationKind, subject: impl ToString) {
        self.violations.push(Violation { kind, subject: subject.to_string() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Check every structural invariant; an empty report means valid.
pub fn validate(b: &Bigraph) -> ValidationReport {
    let mut report = ValidationReport::default();

    for c in b.signature.iter() {
        if !Control::is_valid_name(&c.name) {
            report.push(ViolationKind::InvalidControlName, &c.name);
        }
    }

    for node in b.nodes.values() {
        if node.id.0 >= b.next_id {
            report.push(ViolationKind::StaleIdCounter, node.id);
        }
        match b.signature.get(&node.control) {
            None => report.push(ViolationKind::UnknownControl, node.id),
            Some(c) => {
                if c.arity != node.ports.len() {
                    report.push(ViolationKind::ArityMismatch, node.id);
                }
                if c.atomic && !b.children_of(Place::Node(node.id)).is_empty() {
                    report.push(ViolationKind::AtomicHasChildren, node.id);
                }
            }
        }
        for port in &node.ports {
            if !link_exists(b, port) {
                report.push(ViolationKind::UnknownLink, format!("{}:{}", node.id, port));
            }
        }
    }
    for e in &b.edges {
        if e.0 >= b.next_id {
            report.push(ViolationKind::StaleIdCounter, e);
        }
    }

    // parent map domain: every node and every site 0..m, nothing else
    for id in b.nodes.keys() {
        if !b.parent.contains_key(&Child::Node(*id)) {
            report.push(ViolationKind::MissingParent, id);
        }
    }
    for s in 0..b.interface.sites {
        if !b.parent.contains_key(&Child::Site(s)) {
            report.push(ViolationKind::MissingParent, Child::Site(s));
        }
    }
    for (child, parent) in &b.parent {
        match child {
            Child::Site(s) if *s >= b.interface.sites => {
                report.push(ViolationKind::SiteOutOfRange, child)
            }
            Child::Node(n) if !b.nodes.contains_key(n) => {
                report.push(ViolationKind::DanglingParent, child)
            }
            _ => {}
        }
        let ok = match parent {
            Place::Root(r) => *r < b.interface.roots,
            Place::Node(n) => b.nodes.contains_key(n),
        };
        if !ok {
            report.push(ViolationKind::DanglingParent, format!("{child}->{parent}"));
        }
    }

    // forest: walking up from each node must reach a root
    for id in b.nodes.keys() {
        let mut seen = BTreeSet::new();
        let mut cur = *id;
        loop {
            if !seen.insert(cur) {
                report.push(ViolationKind::NotAForest, id);
                break;
            }
            match b.parent.get(&Child::Node(cur)) {
                Some(Place::Node(p)) if b.nodes.contains_key(p) => cur = *p,
                _ => break,
            }
        }
    }

    let keys: BTreeSet<&String> = b.inner.keys().collect();
    let declared: BTreeSet<&String> = b.interface.inner_names.iter().collect();
    if keys != declared {
        report.push(ViolationKind::InnerNameMismatch, "inner names");
    }
    for (x, t) in &b.inner {
        if !link_exists(b, t) {
            report.push(ViolationKind::UnknownLink, format!("inner {x}:{t}"));
        }
    }

    report
}

fn link_exists(b: &Bigraph, l: &LinkTarget) -> bool {
    match l {
        LinkTarget::Edge(e) => b.edges.contains(e),
        LinkTarget::Outer(x) => b.interface.outer_names.contains(x),
    }
}
