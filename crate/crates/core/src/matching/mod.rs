//! Occurrences of a redex in a ground agent.
//!
//! An occurrence is an injective, control-preserving node map that keeps the
//! redex place structure, leaves no unmatched child under a site-free redex
//! node, maps each closed redex edge onto an agent edge with exactly the
//! image points, and sends every redex outer name to one agent link.

mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::bigraph::{Bigraph, Child, EdgeId, LinkTarget, NodeId, Place};

pub use oracle::{oracle_occurrences, ORACLE_NODE_LIMIT};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    /// Redex node → agent node.
    pub node_map: BTreeMap<NodeId, NodeId>,
    /// Redex site → agent nodes rooting the parameter forest.
    pub site_fill: BTreeMap<usize, Vec<NodeId>>,
    /// Redex link (closed edge or outer name) → agent link. Links without
    /// points are absent.
    pub link_map: BTreeMap<LinkTarget, LinkTarget>,
    /// Agent place hosting each redex root.
    pub root_places: Vec<Place>,
}

impl Occurrence {
    /// Agent images in redex-id order; the canonical sort key.
    pub fn key(&self) -> Vec<NodeId> {
        self.node_map.values().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<NodeId> {
        self.node_map.values().copied().collect()
    }

    /// `[n3,n5,...]`
    pub fn summary(&self) -> String {
        let ids: Vec<String> = self.key().iter().map(|n| n.to_string()).collect();
        format!("[{}]", ids.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solidity {
    NoRegions,
    EmptyRoot(usize),
    SiteIsRoot(usize),
    SharedSiteParent(NodeId),
    HasInnerNames,
}

impl fmt::Display for Solidity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solidity::NoRegions => write!(f, "redex has no regions"),
            Solidity::EmptyRoot(r) => write!(f, "root {r} contains no node"),
            Solidity::SiteIsRoot(s) => write!(f, "site {s} sits directly under a root"),
            Solidity::SharedSiteParent(n) => write!(f, "node {n} has more than one site"),
            Solidity::HasInnerNames => write!(f, "redex has inner names"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("redex is not solid: {0}")]
    RedexNotSolid(Solidity),
    #[error("agent is not ground")]
    AgentNotGround,
    #[error("agent has {0} nodes; the oracle handles at most {ORACLE_NODE_LIMIT}")]
    SizeLimit(usize),
}

/// Solidity: at least one region, every region holds a node, no site is a
/// root, no node has two sites, no inner names.
pub fn check_solid(redex: &Bigraph) -> Result<(), MatchError> {
    let i = redex.interface();
    let fail = |s| Err(MatchError::RedexNotSolid(s));
    if i.roots == 0 {
        return fail(Solidity::NoRegions);
    }
    if !i.inner_names.is_empty() {
        return fail(Solidity::HasInnerNames);
    }
    for r in 0..i.roots {
        if redex.node_children(Place::Root(r)).next().is_none() {
            return fail(Solidity::EmptyRoot(r));
        }
    }
    let mut seen = BTreeSet::new();
    for s in 0..i.sites {
        match redex.parent_of(Child::Site(s)) {
            Some(Place::Root(_)) | None => return fail(Solidity::SiteIsRoot(s)),
            Some(Place::Node(n)) => {
                if !seen.insert(n) {
                    return fail(Solidity::SharedSiteParent(n));
                }
            }
        }
    }
    Ok(())
}

fn site_of(redex: &Bigraph, u: NodeId) -> Option<usize> {
    redex.children_of(Place::Node(u)).iter().find_map(|c| match c {
        Child::Site(s) => Some(*s),
        Child::Node(_) => None,
    })
}

struct Matcher<'a> {
    agent: &'a Bigraph,
    redex: &'a Bigraph,
    order: Vec<NodeId>,
    agent_points: BTreeMap<LinkTarget, Vec<(NodeId, usize)>>,
    redex_points: BTreeMap<LinkTarget, Vec<(NodeId, usize)>>,
    by_control: BTreeMap<String, Vec<NodeId>>,
    nmap: BTreeMap<NodeId, NodeId>,
    used: BTreeSet<NodeId>,
    lmap: BTreeMap<LinkTarget, LinkTarget>,
    /// agent edges already claimed by a closed redex edge
    claimed: BTreeMap<EdgeId, EdgeId>,
    root_places: Vec<Option<Place>>,
    found: Vec<Occurrence>,
}

impl<'a> Matcher<'a> {
    fn new(agent: &'a Bigraph, redex: &'a Bigraph) -> Self {
        let mut by_control: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        for n in agent.nodes() {
            by_control.entry(n.control.clone()).or_default().push(n.id);
        }
        let mut m = Matcher {
            agent,
            redex,
            order: Vec::new(),
            agent_points: agent.link_points(),
            redex_points: redex.link_points(),
            by_control,
            nmap: BTreeMap::new(),
            used: BTreeSet::new(),
            lmap: BTreeMap::new(),
            claimed: BTreeMap::new(),
            root_places: vec![None; redex.interface().roots],
            found: Vec::new(),
        };
        m.plan();
        m
    }

    fn rarity(&self, v: NodeId) -> usize {
        let ctrl = &self.redex.node(v).expect("redex node").control;
        self.by_control.get(ctrl).map_or(0, Vec::len)
    }

    /// Anchor on the rarest control, then grow along place-graph adjacency
    /// (parent, children, same-region siblings).
    fn plan(&mut self) {
        let redex = self.redex;
        let mut remaining: BTreeSet<NodeId> = redex.node_ids().collect();
        let mut placed: BTreeSet<NodeId> = BTreeSet::new();
        while !remaining.is_empty() {
            let adjacent = remaining.iter().copied().filter(|v| {
                let parent = redex.parent_of(Child::Node(*v));
                let parent_placed = matches!(parent, Some(Place::Node(u)) if placed.contains(&u));
                let child_placed = redex.node_children(Place::Node(*v)).any(|w| placed.contains(&w));
                let sibling_placed = matches!(parent, Some(p @ Place::Root(_))
                    if redex.node_children(p).any(|w| placed.contains(&w)));
                parent_placed || child_placed || sibling_placed
            });
            let pick = adjacent
                .min_by_key(|v| (self.rarity(*v), *v))
                .or_else(|| remaining.iter().copied().min_by_key(|v| (self.rarity(*v), *v)))
                .expect("non-empty");
            remaining.remove(&pick);
            placed.insert(pick);
            self.order.push(pick);
        }
    }

    fn candidates(&self, v: NodeId) -> Vec<NodeId> {
        let redex = self.redex;
        let node = redex.node(v).expect("redex node");
        let pool: Vec<NodeId> = match redex.parent_of(Child::Node(v)) {
            Some(Place::Node(u)) if self.nmap.contains_key(&u) => {
                self.agent.node_children(Place::Node(self.nmap[&u])).collect()
            }
            parent => {
                let via_child = redex
                    .node_children(Place::Node(v))
                    .find_map(|w| self.nmap.get(&w))
                    .and_then(|img| self.agent.parent_of(Child::Node(*img)));
                match (via_child, parent) {
                    (Some(Place::Node(p)), _) => vec![p],
                    (Some(Place::Root(_)), _) => vec![],
                    (None, Some(Place::Root(r))) if self.root_places[r].is_some() => {
                        self.agent.node_children(self.root_places[r].unwrap()).collect()
                    }
                    _ => self.by_control.get(&node.control).cloned().unwrap_or_default(),
                }
            }
        };
        pool.into_iter()
            .filter(|y| !self.used.contains(y))
            .filter(|y| {
                let a = self.agent.node(*y).expect("agent node");
                a.control == node.control && (node.label.is_none() || node.label == a.label)
            })
            .collect()
    }

    /// Place and link checks for tentatively mapping `v` to `y`. On success
    /// returns the undo log.
    fn bind(&mut self, v: NodeId, y: NodeId) -> Option<Undo> {
        let redex = self.redex;
        let agent = self.agent;
        let agent_parent = agent.parent_of(Child::Node(y)).expect("agent parent");
        let mut undo = Undo::default();
        match redex.parent_of(Child::Node(v)).expect("redex parent") {
            Place::Node(u) => {
                if let Some(img) = self.nmap.get(&u) {
                    if agent_parent != Place::Node(*img) {
                        return None;
                    }
                }
            }
            Place::Root(r) => match self.root_places[r] {
                Some(p) if p != agent_parent => return None,
                Some(_) => {}
                None => {
                    self.root_places[r] = Some(agent_parent);
                    undo.root = Some(r);
                }
            },
        }
        for w in redex.node_children(Place::Node(v)) {
            if let Some(img) = self.nmap.get(&w) {
                if agent.parent_of(Child::Node(*img)) != Some(Place::Node(y)) {
                    self.rollback(undo);
                    return None;
                }
            }
        }
        let rports = redex.node(v).expect("redex node").ports.clone();
        let aports = &agent.node(y).expect("agent node").ports;
        for (l, m) in rports.iter().zip(aports) {
            let ok = match self.lmap.get(l) {
                Some(bound) => bound == m,
                None => match (l, m) {
                    (LinkTarget::Edge(_), LinkTarget::Outer(_)) => false,
                    (LinkTarget::Edge(e), LinkTarget::Edge(f)) => {
                        if self.claimed.contains_key(f) {
                            false
                        } else {
                            self.claimed.insert(*f, *e);
                            self.lmap.insert(l.clone(), m.clone());
                            undo.links.push(l.clone());
                            true
                        }
                    }
                    (LinkTarget::Outer(_), _) => {
                        self.lmap.insert(l.clone(), m.clone());
                        undo.links.push(l.clone());
                        true
                    }
                },
            };
            if !ok {
                self.rollback(undo);
                return None;
            }
        }
        self.nmap.insert(v, y);
        self.used.insert(y);
        undo.node = Some((v, y));
        Some(undo)
    }

    fn rollback(&mut self, undo: Undo) {
        if let Some(r) = undo.root {
            self.root_places[r] = None;
        }
        for l in undo.links {
            if let Some(LinkTarget::Edge(f)) = self.lmap.remove(&l) {
                if matches!(l, LinkTarget::Edge(_)) {
                    self.claimed.remove(&f);
                }
            }
        }
        if let Some((v, y)) = undo.node {
            self.nmap.remove(&v);
            self.used.remove(&y);
        }
    }

    fn search(&mut self, depth: usize) {
        if depth == self.order.len() {
            if let Some(occ) = self.finish() {
                self.found.push(occ);
            }
            return;
        }
        let v = self.order[depth];
        for y in self.candidates(v) {
            if let Some(undo) = self.bind(v, y) {
                self.search(depth + 1);
                self.rollback(undo);
            }
        }
    }

    /// Global conditions that need the complete map.
    fn finish(&self) -> Option<Occurrence> {
        let redex = self.redex;
        let agent = self.agent;
        let mut site_fill = BTreeMap::new();
        for u in redex.node_ids() {
            let img = self.nmap[&u];
            let matched_kids: BTreeSet<NodeId> =
                redex.node_children(Place::Node(u)).map(|w| self.nmap[&w]).collect();
            let rest: Vec<NodeId> =
                agent.node_children(Place::Node(img)).filter(|c| !matched_kids.contains(c)).collect();
            match site_of(redex, u) {
                None if !rest.is_empty() => return None,
                None => {}
                Some(s) => {
                    for p in &rest {
                        if self.used.contains(p) || agent.descendants(*p).iter().any(|d| self.used.contains(d)) {
                            return None;
                        }
                    }
                    site_fill.insert(s, rest);
                }
            }
        }
        for (l, pts) in &self.redex_points {
            if let LinkTarget::Edge(_) = l {
                if pts.is_empty() {
                    continue;
                }
                let target = &self.lmap[l];
                if self.agent_points[target].len() != pts.len() {
                    return None;
                }
            }
        }
        Some(Occurrence {
            node_map: self.nmap.clone(),
            site_fill,
            link_map: self.lmap.clone(),
            root_places: self.root_places.iter().map(|p| p.expect("every root anchored")).collect(),
        })
    }
}

#[derive(Default)]
struct Undo {
    root: Option<usize>,
    links: Vec<LinkTarget>,
    node: Option<(NodeId, NodeId)>,
}

/// All occurrences of a solid `redex` in the ground `agent`, sorted by
/// [`Occurrence::key`].
pub fn find_occurrences(agent: &Bigraph, redex: &Bigraph) -> Result<Vec<Occurrence>, MatchError> {
    check_solid(redex)?;
    if !agent.is_ground() {
        return Err(MatchError::AgentNotGround);
    }
    if redex.node_count() > agent.node_count() {
        return Ok(Vec::new());
    }
    let mut m = Matcher::new(agent, redex);
    m.search(0);
    let mut found = m.found;
    found.sort_by_key(Occurrence::key);
    found.dedup_by(|a, b| a.key() == b.key());
    Ok(found)
}

pub fn count_occurrences(agent: &Bigraph, redex: &Bigraph) -> Result<usize, MatchError> {
    find_occurrences(agent, redex).map(|v| v.len())
}

/// Whether `occ` is an occurrence of `redex` in `agent`, checked from the
/// definitions.
pub fn is_occurrence(agent: &Bigraph, redex: &Bigraph, occ: &Occurrence) -> bool {
    oracle::check_map(agent, redex, &occ.node_map).as_ref() == Some(occ)
}
