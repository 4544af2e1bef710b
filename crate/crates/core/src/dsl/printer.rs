use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{BrsInit, Program};
use crate::bigraph::{Bigraph, Child, EdgeId, LinkTarget, NodeId, Place};
use crate::rewrite::{EscalationClause, ReactionRule, Selector};

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Place chain from `p` up to its root, `p` first.
fn chain(b: &Bigraph, p: Place) -> Vec<Place> {
    match p {
        Place::Root(_) => vec![p],
        Place::Node(n) => {
            let mut v = vec![p];
            v.extend(b.ancestors(n));
            v
        }
    }
}

/// Edges in order of first use by the printed text, idle edges last, so
/// closure names do not depend on edge ids.
fn edge_order(b: &Bigraph) -> Vec<EdgeId> {
    fn visit(b: &Bigraph, place: Place, seen: &mut Vec<EdgeId>) {
        for c in b.canonical_children(place) {
            if let Child::Node(n) = c {
                for p in &b.node(n).expect("node").ports {
                    if let LinkTarget::Edge(e) = p {
                        if !seen.contains(e) {
                            seen.push(*e);
                        }
                    }
                }
                visit(b, Place::Node(n), seen);
            }
        }
    }
    let mut seen = Vec::new();
    for r in 0..b.interface().roots {
        visit(b, Place::Root(r), &mut seen);
    }
    for e in b.edges() {
        if !seen.contains(e) {
            seen.push(*e);
        }
    }
    seen
}

struct Printer<'a> {
    b: &'a Bigraph,
    site_names: &'a [String],
    edge_names: BTreeMap<EdgeId, String>,
    closures: BTreeMap<Place, Vec<String>>,
}

impl<'a> Printer<'a> {
    fn new(b: &'a Bigraph, site_names: &'a [String]) -> Self {
        let points = b.link_points();
        let mut used: BTreeSet<String> = b.interface().outer_names.clone();
        let mut edge_names = BTreeMap::new();
        let mut closures: BTreeMap<Place, Vec<String>> = BTreeMap::new();
        let mut k = 0;
        for e in &edge_order(b) {
            let name = loop {
                let cand = format!("e{k}");
                k += 1;
                if used.insert(cand.clone()) {
                    break cand;
                }
            };
            // innermost place enclosing every point; idle edges go to region 0
            let pts = points.get(&LinkTarget::Edge(*e)).cloned().unwrap_or_default();
            let mut chains = pts.iter().filter_map(|(n, _)| b.parent_of(Child::Node(*n))).map(|p| chain(b, p));
            let place = match chains.next() {
                None => Place::Root(0),
                Some(first) => {
                    let rest: Vec<Vec<Place>> = chains.collect();
                    first
                        .iter()
                        .copied()
                        .find(|p| rest.iter().all(|c| c.contains(p)))
                        .unwrap_or(*first.last().expect("non-empty chain"))
                }
            };
            closures.entry(place).or_default().push(name.clone());
            edge_names.insert(*e, name);
        }
        Printer { b, site_names, edge_names, closures }
    }

    fn link(&self, l: &LinkTarget) -> String {
        match l {
            LinkTarget::Outer(x) => x.clone(),
            LinkTarget::Edge(e) => self.edge_names[e].clone(),
        }
    }

    fn items(&self, place: Place) -> Vec<String> {
        self.b
            .canonical_children(place)
            .iter()
            .map(|c| match c {
                Child::Site(s) => self.site_names.get(*s).cloned().unwrap_or_else(|| format!("s{s}")),
                Child::Node(n) => self.node(*n),
            })
            .collect()
    }

    fn closure_prefix(&self, place: Place) -> String {
        self.closures.get(&place).map_or_else(String::new, |names| names.iter().map(|n| format!("/{n} ")).collect())
    }

    fn node(&self, n: NodeId) -> String {
        let node = self.b.node(n).expect("node");
        let mut out = node.control.clone();
        if !node.ports.is_empty() {
            let ports: Vec<String> = node.ports.iter().map(|p| self.link(p)).collect();
            write!(out, "{{{}}}", ports.join(", ")).unwrap();
        }
        if let Some(l) = &node.label {
            write!(out, ":{}", quote(l)).unwrap();
        }
        let items = self.items(Place::Node(n));
        let atomic = self.b.control_of(n).is_some_and(|c| c.atomic);
        if !items.is_empty() {
            let body = items.join(" | ");
            if self.closures.contains_key(&Place::Node(n)) {
                write!(out, ".({}({body}))", self.closure_prefix(Place::Node(n))).unwrap();
            } else {
                write!(out, ".({body})").unwrap();
            }
        } else if !atomic {
            out.push_str(".()");
        }
        out
    }

    fn region(&self, r: usize) -> String {
        let items = self.items(Place::Root(r));
        let prefix = self.closure_prefix(Place::Root(r));
        match (prefix.is_empty(), items.len()) {
            (true, 0) => "()".to_string(),
            (true, 1) => items[0].clone(),
            _ => format!("{prefix}({})", items.join(" | ")),
        }
    }

    fn render(&self) -> String {
        let roots = self.b.interface().roots;
        if roots == 0 {
            return "()".to_string();
        }
        (0..roots).map(|r| self.region(r)).collect::<Vec<_>>().join(" || ")
    }
}

/// Surface syntax for one bigraph; `site_names[i]` names site `i`.
pub fn print_bigraph(b: &Bigraph, site_names: &[String]) -> String {
    Printer::new(b, site_names).render()
}

fn print_selector(s: &Selector) -> String {
    match s {
        Selector::Labels(c) => format!("labels({c})"),
        Selector::Count(c) => format!("count({c})"),
        Selector::RuleName => "rule".to_string(),
    }
}

fn print_escalation(e: &EscalationClause) -> String {
    if e.fields.is_empty() {
        return format!("@escalate({})", e.schema_id);
    }
    let fields: Vec<String> = e.fields.iter().map(|(f, s)| format!("{f}={}", print_selector(s))).collect();
    format!("@escalate({}; {})", e.schema_id, fields.join(", "))
}

fn print_rule(r: &ReactionRule) -> String {
    let reactum_sites: Vec<String> = r.eta.iter().map(|s| r.site_names[*s].clone()).collect();
    let mut out = format!(
        "react {} =\n    {}\n    --> {}",
        r.name,
        print_bigraph(&r.redex, &r.site_names),
        print_bigraph(&r.reactum, &reactum_sites)
    );
    if let Some(e) = &r.escalation {
        write!(out, " {}", print_escalation(e)).unwrap();
    }
    out.push(';');
    out
}

/// Canonical text for a program. Declarations come in the order controls
/// (by name), bigraphs, rules, `brs` block, separated by blank lines.
pub fn pretty_print(p: &Program) -> String {
    let mut sections: Vec<String> = Vec::new();
    if !p.signature.is_empty() {
        let lines: Vec<String> = p
            .signature
            .iter()
            .map(|c| format!("{}ctrl {} = {};", if c.atomic { "atomic " } else { "" }, c.name, c.arity))
            .collect();
        sections.push(lines.join("\n"));
    }
    if !p.bigraphs.is_empty() {
        let lines: Vec<String> =
            p.bigraphs.iter().map(|b| format!("big {} = {};", b.name, print_bigraph(&b.bigraph, &b.site_names))).collect();
        sections.push(lines.join("\n"));
    }
    for r in &p.rules {
        sections.push(print_rule(r));
    }
    if let Some(brs) = &p.brs {
        let init = match &brs.init {
            BrsInit::Named(n) => n.clone(),
            BrsInit::Inline(b) => print_bigraph(&b.bigraph, &b.site_names),
        };
        let classes: Vec<String> = brs.classes.iter().map(|c| format!("{{{}}}", c.join(", "))).collect();
        sections.push(format!("begin brs\n    init {init};\n    rules = [{}];\nend", classes.join(", ")));
    }
    if sections.is_empty() {
        return String::new();
    }
    let mut out = sections.join("\n\n");
    out.push('\n');
    out
}
