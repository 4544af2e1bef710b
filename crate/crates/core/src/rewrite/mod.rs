//! Reaction rules and their application at an occurrence.

mod brs;
mod predicate;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bigraph::{validate, Bigraph, BigraphError, Child, LinkTarget, NodeId, Place};
use crate::matching::{check_solid, is_occurrence, MatchError, Occurrence};

pub use brs::{run, step, BrsSpec, Reaction, StepRecord, Termination, Trace};
pub use predicate::{check_predicate, Comparison, Predicate};

/// What a rule-driven escalation reports about its occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    /// Labels of matched nodes with this control, as a name list.
    Labels(String),
    /// Number of matched nodes with this control.
    Count(String),
    /// The rule's own name.
    RuleName,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EscalationClause {
    pub schema_id: String,
    pub fields: Vec<(String, Selector)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error(transparent)]
    NotSolid(#[from] MatchError),
    #[error("instantiation map has {got} entries for {want} reactum sites")]
    EtaLength { want: usize, got: usize },
    #[error("reactum site {reactum} refers to missing redex site {redex}")]
    EtaOutOfRange { reactum: usize, redex: usize },
    #[error("redex has {redex} regions but reactum has {reactum}")]
    RegionMismatch { redex: usize, reactum: usize },
    #[error("reactum uses outer name `{0}` absent from the redex")]
    NameLeak(String),
    #[error("reactum has inner names")]
    ReactumInnerNames,
    #[error("{side} is invalid: {report}")]
    Invalid { side: &'static str, report: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReactionRule {
    pub name: String,
    pub redex: Bigraph,
    pub reactum: Bigraph,
    /// Reactum site → redex site. Redex sites may be dropped or repeated.
    pub eta: Vec<usize>,
    /// Display names of the redex sites.
    pub site_names: Vec<String>,
    pub escalation: Option<EscalationClause>,
    /// Reactum node → redex node it stands for; labels carry across.
    carry: BTreeMap<NodeId, NodeId>,
}

impl ReactionRule {
    pub fn new(
        name: impl Into<String>,
        redex: Bigraph,
        reactum: Bigraph,
        eta: Vec<usize>,
    ) -> Result<Self, RuleError> {
        check_solid(&redex)?;
        for (side, b) in [("redex", &redex), ("reactum", &reactum)] {
            let report = validate(b);
            if !report.is_valid() {
                return Err(RuleError::Invalid { side, report: report.to_string() });
            }
        }
        if !reactum.interface().inner_names.is_empty() {
            return Err(RuleError::ReactumInnerNames);
        }
        let (ri, ti) = (redex.interface().clone(), reactum.interface().clone());
        if ri.roots != ti.roots {
            return Err(RuleError::RegionMismatch { redex: ri.roots, reactum: ti.roots });
        }
        if eta.len() != ti.sites {
            return Err(RuleError::EtaLength { want: ti.sites, got: eta.len() });
        }
        for (i, s) in eta.iter().enumerate() {
            if *s >= ri.sites {
                return Err(RuleError::EtaOutOfRange { reactum: i, redex: *s });
            }
        }
        if let Some(x) = ti.outer_names.difference(&ri.outer_names).next() {
            return Err(RuleError::NameLeak(x.clone()));
        }
        let mut reactum = reactum;
        if ti.outer_names != ri.outer_names {
            let mut b = reactum.edit();
            for x in &ri.outer_names {
                b.add_outer_name(x);
            }
            reactum = b.build_unchecked();
        }
        let carry = correspondence(&redex, &reactum);
        let site_names = (0..redex.interface().sites).map(|s| format!("s{s}")).collect();
        Ok(ReactionRule { name: name.into(), redex, reactum, eta, site_names, escalation: None, carry })
    }

    pub fn with_site_names(mut self, names: Vec<String>) -> Self {
        if names.len() == self.redex.interface().sites {
            self.site_names = names;
        }
        self
    }

    pub fn with_escalation(mut self, clause: EscalationClause) -> Self {
        self.escalation = Some(clause);
        self
    }
}

/// Pair reactum nodes with redex nodes of the same control at the same
/// structural position, region by region and level by level.
fn correspondence(redex: &Bigraph, reactum: &Bigraph) -> BTreeMap<NodeId, NodeId> {
    let mut out = BTreeMap::new();
    let mut queue: Vec<(Place, Place)> = (0..redex.interface().roots).map(|r| (Place::Root(r), Place::Root(r))).collect();
    while let Some((rp, tp)) = queue.pop() {
        let mut free: Vec<NodeId> = redex.node_children(rp).collect();
        for t in reactum.node_children(tp) {
            let ctrl = &reactum.node(t).expect("reactum node").control;
            if let Some(pos) = free.iter().position(|r| &redex.node(*r).expect("redex node").control == ctrl) {
                let r = free.remove(pos);
                out.insert(t, r);
                queue.push((Place::Node(r), Place::Node(t)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("occurrence does not hold in the current agent")]
    StaleOccurrence,
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Bigraph(#[from] BigraphError),
}

/// Replace the matched redex image by a fresh reactum instance. Unmatched
/// agent nodes keep their ids; parameters are moved (first use), copied
/// with fresh ids (further uses) or deleted (unused).
pub fn apply(agent: &Bigraph, rule: &ReactionRule, occ: &Occurrence) -> Result<Bigraph, RewriteError> {
    if !is_occurrence(agent, &rule.redex, occ) {
        return Err(RewriteError::StaleOccurrence);
    }
    let mut out = agent.edit();
    for img in occ.node_map.values() {
        out.remove_node(*img);
    }
    for (l, target) in &occ.link_map {
        if let (LinkTarget::Edge(_), LinkTarget::Edge(f)) = (l, target) {
            out.remove_edge(*f);
        }
    }

    let reactum = &rule.reactum;
    let mut links: BTreeMap<LinkTarget, LinkTarget> = BTreeMap::new();
    let mut link_for = |l: &LinkTarget, out: &mut crate::bigraph::BigraphBuilder| -> LinkTarget {
        if let Some(t) = links.get(l) {
            return t.clone();
        }
        let t = match l {
            LinkTarget::Outer(_) => occ.link_map.get(l).cloned(),
            LinkTarget::Edge(_) => None,
        }
        .unwrap_or_else(|| LinkTarget::Edge(out.add_edge()));
        links.insert(l.clone(), t.clone());
        t
    };

    let mut fresh: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue: Vec<Place> = (0..reactum.interface().roots).map(Place::Root).collect();
    let mut i = 0;
    while i < queue.len() {
        let p = queue[i];
        i += 1;
        for n in reactum.node_children(p) {
            let node = reactum.node(n).expect("reactum node");
            let parent = match p {
                Place::Root(r) => occ.root_places[r],
                Place::Node(q) => Place::Node(fresh[&q]),
            };
            let label = node.label.clone().or_else(|| {
                rule.carry
                    .get(&n)
                    .and_then(|r| agent.node(occ.node_map[r]))
                    .and_then(|a| a.label.clone())
            });
            let ports: Vec<LinkTarget> = node.ports.iter().map(|l| link_for(l, &mut out)).collect();
            let id = NodeId(out.fresh_id());
            out.insert_node(id, parent, &node.control, label, ports)?;
            fresh.insert(n, id);
            queue.push(Place::Node(n));
        }
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for (site, redex_site) in rule.eta.iter().enumerate() {
        let parent = match reactum.parent_of(Child::Site(site)).expect("reactum site parent") {
            Place::Root(r) => occ.root_places[r],
            Place::Node(q) => Place::Node(fresh[&q]),
        };
        let roots = occ.site_fill.get(redex_site).cloned().unwrap_or_default();
        if used.insert(*redex_site) {
            for r in roots {
                out.set_parent(Child::Node(r), parent)?;
            }
        } else {
            for r in roots {
                copy_subtree(agent, r, parent, &mut out)?;
            }
        }
    }
    for (s, roots) in &occ.site_fill {
        if !used.contains(s) {
            for r in roots {
                out.remove_subtree(*r);
            }
        }
    }
    Ok(out.build_unchecked())
}

fn copy_subtree(
    src: &Bigraph,
    root: NodeId,
    parent: Place,
    out: &mut crate::bigraph::BigraphBuilder,
) -> Result<(), BigraphError> {
    let node = src.node(root).expect("parameter node");
    let id = NodeId(out.fresh_id());
    out.insert_node(id, parent, &node.control, node.label.clone(), node.ports.clone())?;
    for c in src.node_children(Place::Node(root)).collect::<Vec<_>>() {
        copy_subtree(src, c, Place::Node(id), out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::{iso_eq, BigraphBuilder, Control, Signature};
    use crate::matching::find_occurrences;

    fn sig() -> Signature {
        Signature::from_controls([
            Control::new("MeetingRoom", 0, false),
            Control::new("Users", 0, false),
            Control::new("Node", 1, true),
            Control::new("A", 0, false),
            Control::new("B", 0, false),
        ])
        .unwrap()
    }

    fn shutdown() -> ReactionRule {
        let mut r = BigraphBuilder::new(sig());
        let root = r.add_root();
        let m = r.add_node(Place::Root(root), "MeetingRoom", None, vec![]).unwrap();
        r.add_node(Place::Node(m), "Users", None, vec![]).unwrap();
        let e = r.add_edge();
        r.add_node(Place::Node(m), "Node", None, vec![LinkTarget::Edge(e)]).unwrap();
        r.add_site(Place::Node(m));
        let mut t = BigraphBuilder::new(sig());
        let root = t.add_root();
        let m = t.add_node(Place::Root(root), "MeetingRoom", None, vec![]).unwrap();
        t.add_site(Place::Node(m));
        ReactionRule::new("shutdown_nodes", r.build().unwrap(), t.build().unwrap(), vec![0]).unwrap()
    }

    fn room(label: Option<&str>) -> (Bigraph, Vec<NodeId>) {
        let mut b = BigraphBuilder::new(sig());
        let r = b.add_root();
        let m = b.add_node(Place::Root(r), "MeetingRoom", label, vec![]).unwrap();
        b.add_node(Place::Node(m), "Users", None, vec![]).unwrap();
        let mut nodes = vec![];
        for _ in 0..2 {
            let e = b.add_edge();
            nodes.push(b.add_node(Place::Node(m), "Node", None, vec![LinkTarget::Edge(e)]).unwrap());
        }
        (b.build().unwrap(), nodes)
    }

    #[test]
    fn shutdown_keeps_one_node() {
        let (agent, nodes) = room(Some("room-a"));
        let rule = shutdown();
        let occ = find_occurrences(&agent, &rule.redex).unwrap().remove(0);
        let out = apply(&agent, &rule, &occ).unwrap();
        assert!(validate(&out).is_valid());
        assert_eq!(out.node_count(), 2);
        // the first Node was matched; the second survives with its id and edge
        assert!(out.node(nodes[0]).is_none());
        let survivor = out.node(nodes[1]).unwrap();
        assert_eq!(out.edges().len(), 1);
        assert!(matches!(survivor.ports[0], LinkTarget::Edge(_)));
        let room = out.nodes().find(|n| n.control == "MeetingRoom").unwrap();
        assert_eq!(room.label.as_deref(), Some("room-a"));
        assert_eq!(out.parent_of(Child::Node(nodes[1])), Some(Place::Node(room.id)));
    }

    #[test]
    fn identity_rule_is_neutral() {
        let mut r = BigraphBuilder::new(sig());
        let root = r.add_root();
        r.add_node(Place::Root(root), "A", None, vec![]).unwrap();
        let a = r.build().unwrap();
        let rule = ReactionRule::new("id", a.clone(), a.clone(), vec![]).unwrap();
        let occ = find_occurrences(&a, &rule.redex).unwrap().remove(0);
        assert!(iso_eq(&apply(&a, &rule, &occ).unwrap(), &a));
    }

    #[test]
    fn duplication_copies_with_fresh_ids() {
        // A.(s) --> A.(s) | A.(s)  on  A.(B)
        let mut r = BigraphBuilder::new(sig());
        let root = r.add_root();
        let a = r.add_node(Place::Root(root), "A", None, vec![]).unwrap();
        r.add_site(Place::Node(a));
        let mut t = BigraphBuilder::new(sig());
        let root = t.add_root();
        for _ in 0..2 {
            let a = t.add_node(Place::Root(root), "A", None, vec![]).unwrap();
            t.add_site(Place::Node(a));
        }
        let rule = ReactionRule::new("dup", r.build().unwrap(), t.build().unwrap(), vec![0, 0]).unwrap();

        let mut g = BigraphBuilder::new(sig());
        let root = g.add_root();
        let a = g.add_node(Place::Root(root), "A", None, vec![]).unwrap();
        let b = g.add_node(Place::Node(a), "B", None, vec![]).unwrap();
        let agent = g.build().unwrap();
        let occ = find_occurrences(&agent, &rule.redex).unwrap().remove(0);
        let out = apply(&agent, &rule, &occ).unwrap();
        assert!(validate(&out).is_valid());
        assert_eq!(out.node_count(), 4);
        let bs: Vec<NodeId> = out.nodes().filter(|n| n.control == "B").map(|n| n.id).collect();
        assert_eq!(bs.len(), 2);
        assert!(bs.contains(&b));
        assert!(bs.iter().all(|id| id.0 < out.next_fresh_id()));
        let ids: BTreeSet<NodeId> = out.node_ids().collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn stale_occurrence_rejected() {
        let (agent, _) = room(None);
        let rule = shutdown();
        let occ = find_occurrences(&agent, &rule.redex).unwrap().remove(0);
        let after = apply(&agent, &rule, &occ).unwrap();
        assert_eq!(apply(&after, &rule, &occ), Err(RewriteError::StaleOccurrence));
    }

    #[test]
    fn rule_construction_checks() {
        let (agent, _) = room(None);
        let rule = shutdown();
        assert!(matches!(
            ReactionRule::new("bad", rule.redex.clone(), rule.reactum.clone(), vec![]),
            Err(RuleError::EtaLength { .. })
        ));
        // a ground reactum simply drops the parameter
        assert!(ReactionRule::new("drop", rule.redex.clone(), agent, vec![]).is_ok());
        assert!(matches!(
            ReactionRule::new("bad", rule.redex.clone(), rule.reactum.clone(), vec![3]),
            Err(RuleError::EtaOutOfRange { reactum: 0, redex: 3 })
        ));
        let two = crate::bigraph::juxtapose(&rule.reactum, &rule.reactum).unwrap();
        assert!(matches!(
            ReactionRule::new("bad", rule.redex.clone(), two, vec![0, 0]),
            Err(RuleError::RegionMismatch { .. })
        ));
    }
}
