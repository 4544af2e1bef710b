//! Bigraph values: a place graph (rooted forest of typed nodes, sites and
//! roots) and a link graph (hyperedges over node ports, open links ending in
//! outer names) sharing one node set.
//!
//! A [`Bigraph`] is immutable once built. All edits go through a
//! [`BigraphBuilder`], which produces a fresh value.

mod canonical;
mod iso;
mod ops;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{CanonicalDoc, CanonicalError};
pub use iso::{iso_eq, iso_eq_up_to_sites};
pub use ops::{close_name, compose, juxtapose, merge_under, permute_sites};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

/// Opaque node identifier, unique within one bigraph value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

/// Identifier of a closed hyperedge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Where a port (or an inner name) is linked: a closed edge or an outer name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkTarget {
    Edge(EdgeId),
    Outer(String),
}

impl fmt::Display for LinkTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkTarget::Edge(e) => write!(f, "{e}"),
            LinkTarget::Outer(x) => write!(f, "{x}"),
        }
    }
}

/// A parent in the place graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Root(usize),
    Node(NodeId),
}

/// A child in the place graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Child {
    Site(usize),
    Node(NodeId),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Root(r) => write!(f, "r{r}"),
            Place::Node(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Child {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Child::Site(s) => write!(f, "s{s}"),
            Child::Node(n) => write!(f, "{n}"),
        }
    }
}

/// A node type: name, port count, and whether it may contain children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Control {
    pub name: String,
    pub arity: usize,
    pub atomic: bool,
}

impl Control {
    pub fn new(name: impl Into<String>, arity: usize, atomic: bool) -> Self {
        Self { name: name.into(), arity, atomic }
    }

    /// `[A-Z][A-Za-z0-9_]*`
    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

/// A set of controls keyed by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    controls: BTreeMap<String, Control>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_controls(controls: impl IntoIterator<Item = Control>) -> Result<Self, BigraphError> {
        let mut sig = Self::new();
        for c in controls {
            sig.insert(c)?;
        }
        Ok(sig)
    }

    /// Adds a control. Re-adding an identical control is a no-op.
    pub fn insert(&mut self, control: Control) -> Result<(), BigraphError> {
        if !Control::is_valid_name(&control.name) {
            return Err(BigraphError::InvalidControlName(control.name));
        }
        match self.controls.get(&control.name) {
            Some(existing) if *existing != control => {
                Err(BigraphError::SignatureConflict(control.name))
            }
            Some(_) => Ok(()),
            None => {
                self.controls.insert(control.name.clone(), control);
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Control> {
        self.controls.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.controls.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Control> {
        self.controls.values()
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// Union of two signatures; fails when a control name has differing definitions.
    pub fn union(&self, other: &Signature) -> Result<Signature, BigraphError> {
        let mut out = self.clone();
        for c in other.iter() {
            out.insert(c.clone())?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub id: NodeId,
    pub control: String,
    pub label: Option<String>,
    pub ports: Vec<LinkTarget>,
}

/// `⟨sites, inner names⟩ → ⟨roots, outer names⟩`
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interface {
    pub sites: usize,
    pub inner_names: BTreeSet<String>,
    pub roots: usize,
    pub outer_names: BTreeSet<String>,
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        write!(
            f,
            "<{},{{{}}}> -> <{},{{{}}}>",
            self.sites,
            names(&self.inner_names),
            self.roots,
            names(&self.outer_names)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BigraphError {
    #[error("interface mismatch: expected {expected}, found {actual}")]
    InterfaceMismatch { expected: String, actual: String },
    #[error("signature conflict on control `{0}`")]
    SignatureConflict(String),
    #[error("invalid control name `{0}`")]
    InvalidControlName(String),
    #[error("unknown control `{0}`")]
    UnknownControl(String),
    #[error("bigraph is not prime: it has {0} roots")]
    NotPrime(usize),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown place {0}")]
    UnknownPlace(Place),
    #[error("control `{control}` has arity {arity} but {ports} ports were given")]
    ArityMismatch { control: String, arity: usize, ports: usize },
    #[error("atomic node {0} cannot have children")]
    AtomicParent(NodeId),
    #[error("invalid bigraph: {0}")]
    Invalid(ValidationReport),
}

/// An immutable bigraph value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bigraph {
    pub(crate) signature: Signature,
    pub(crate) nodes: BTreeMap<NodeId, Node>,
    pub(crate) parent: BTreeMap<Child, Place>,
    pub(crate) inner: BTreeMap<String, LinkTarget>,
    pub(crate) interface: Interface,
    pub(crate) edges: BTreeSet<EdgeId>,
    pub(crate) next_id: u64,
    pub(crate) children: BTreeMap<Place, Vec<Child>>,
}

impl Bigraph {
    /// The ground bigraph with `roots` empty regions.
    pub fn empty(signature: Signature, roots: usize) -> Self {
        let mut b = BigraphBuilder::new(signature);
        for _ in 0..roots {
            b.add_root();
        }
        b.build_unchecked()
    }

    /// Identity over `⟨roots, names⟩`: each root holds one site; each inner
    /// name links straight to the equally named outer name.
    pub fn identity(signature: Signature, roots: usize, names: &BTreeSet<String>) -> Self {
        let mut b = BigraphBuilder::new(signature);
        for _ in 0..roots {
            let r = b.add_root();
            b.add_site(Place::Root(r));
        }
        for n in names {
            b.add_outer_name(n);
            b.set_inner_name(n, LinkTarget::Outer(n.clone()));
        }
        b.build_unchecked()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &BTreeSet<EdgeId> {
        &self.edges
    }

    pub fn inner_links(&self) -> &BTreeMap<String, LinkTarget> {
        &self.inner
    }

    pub fn control_of(&self, id: NodeId) -> Option<&Control> {
        self.nodes.get(&id).and_then(|n| self.signature.get(&n.control))
    }

    pub fn parent_of(&self, child: Child) -> Option<Place> {
        self.parent.get(&child).copied()
    }

    /// Children of a place, sites first by index then nodes by id.
    pub fn children_of(&self, place: Place) -> &[Child] {
        self.children.get(&place).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn node_children(&self, place: Place) -> impl Iterator<Item = NodeId> + '_ {
        self.children_of(place).iter().filter_map(|c| match c {
            Child::Node(n) => Some(*n),
            Child::Site(_) => None,
        })
    }

    /// All nodes below `id` (excluding `id`), in depth-first order.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.node_children(Place::Node(id)).collect();
        stack.reverse();
        while let Some(n) = stack.pop() {
            out.push(n);
            let mut kids: Vec<NodeId> = self.node_children(Place::Node(n)).collect();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }

    /// Place ancestors of `id`, nearest first, ending at a root.
    pub fn ancestors(&self, id: NodeId) -> Vec<Place> {
        let mut out = Vec::new();
        let mut cur = Child::Node(id);
        let mut guard = self.nodes.len() + 1;
        while let Some(p) = self.parent.get(&cur) {
            out.push(*p);
            match p {
                Place::Root(_) => break,
                Place::Node(n) => cur = Child::Node(*n),
            }
            guard -= 1;
            if guard == 0 {
                break;
            }
        }
        out
    }

    /// The root region a node lives in.
    pub fn root_of(&self, id: NodeId) -> Option<usize> {
        match self.ancestors(id).last() {
            Some(Place::Root(r)) => Some(*r),
            _ => None,
        }
    }

    /// Every point, grouped by link. Idle edges and pointless outer names map
    /// to empty lists.
    pub fn link_points(&self) -> BTreeMap<LinkTarget, Vec<(NodeId, usize)>> {
        let mut out: BTreeMap<LinkTarget, Vec<(NodeId, usize)>> = BTreeMap::new();
        for e in &self.edges {
            out.insert(LinkTarget::Edge(*e), Vec::new());
        }
        for x in &self.interface.outer_names {
            out.insert(LinkTarget::Outer(x.clone()), Vec::new());
        }
        for n in self.nodes.values() {
            for (i, l) in n.ports.iter().enumerate() {
                out.entry(l.clone()).or_default().push((n.id, i));
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.interface.sites == 0 && self.interface.inner_names.is_empty()
    }

    pub fn is_prime(&self) -> bool {
        self.interface.roots == 1 && self.interface.inner_names.is_empty()
    }

    /// Next id the builder would hand out.
    pub fn next_fresh_id(&self) -> u64 {
        self.next_id
    }

    pub fn edit(&self) -> BigraphBuilder {
        BigraphBuilder { b: self.clone() }
    }

    /// Assemble a bigraph from raw parts without any checks. Intended for
    /// tests of [`validate`] and for decoding.
    pub fn from_raw(parts: RawBigraph) -> Self {
        let next = parts
            .nodes
            .keys()
            .map(|n| n.0 + 1)
            .chain(parts.edges.iter().map(|e| e.0 + 1))
            .max()
            .unwrap_or(0);
        let mut b = Bigraph {
            signature: parts.signature,
            nodes: parts.nodes,
            parent: parts.parent,
            inner: parts.inner,
            interface: parts.interface,
            edges: parts.edges,
            next_id: next.max(parts.next_id),
            children: BTreeMap::new(),
        };
        b.reindex();
        b
    }

    pub fn into_raw(self) -> RawBigraph {
        RawBigraph {
            signature: self.signature,
            nodes: self.nodes,
            parent: self.parent,
            inner: self.inner,
            interface: self.interface,
            edges: self.edges,
            next_id: self.next_id,
        }
    }

    pub(crate) fn reindex(&mut self) {
        let mut children: BTreeMap<Place, Vec<Child>> = BTreeMap::new();
        for (c, p) in &self.parent {
            children.entry(*p).or_default().push(*c);
        }
        self.children = children;
    }
}

/// Plain data view of a bigraph; no invariants enforced.
#[derive(Clone, Debug, Default)]
pub struct RawBigraph {
    pub signature: Signature,
    pub nodes: BTreeMap<NodeId, Node>,
    pub parent: BTreeMap<Child, Place>,
    pub inner: BTreeMap<String, LinkTarget>,
    pub interface: Interface,
    pub edges: BTreeSet<EdgeId>,
    pub next_id: u64,
}

/// Mutable staging area that produces [`Bigraph`] values.
#[derive(Clone, Debug)]
pub struct BigraphBuilder {
    pub(crate) b: Bigraph,
}

impl BigraphBuilder {
    pub fn new(signature: Signature) -> Self {
        BigraphBuilder {
            b: Bigraph {
                signature,
                nodes: BTreeMap::new(),
                parent: BTreeMap::new(),
                inner: BTreeMap::new(),
                interface: Interface::default(),
                edges: BTreeSet::new(),
                next_id: 0,
                children: BTreeMap::new(),
            },
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.b.signature
    }

    pub fn signature_mut(&mut self) -> &mut Signature {
        &mut self.b.signature
    }

    /// Raise the fresh-id counter so ids below `min` are never handed out.
    pub fn reserve_ids(&mut self, min: u64) {
        self.b.next_id = self.b.next_id.max(min);
    }

    pub fn add_root(&mut self) -> usize {
        self.b.interface.roots += 1;
        self.b.interface.roots - 1
    }

    pub fn add_site(&mut self, parent: Place) -> usize {
        let s = self.b.interface.sites;
        self.b.interface.sites += 1;
        self.b.parent.insert(Child::Site(s), parent);
        s
    }

    pub fn add_edge(&mut self) -> EdgeId {
        let e = EdgeId(self.fresh_id());
        self.b.edges.insert(e);
        e
    }

    pub fn add_outer_name(&mut self, name: &str) {
        self.b.interface.outer_names.insert(name.to_string());
    }

    pub fn set_inner_name(&mut self, name: &str, target: LinkTarget) {
        self.b.interface.inner_names.insert(name.to_string());
        self.b.inner.insert(name.to_string(), target);
    }

    /// Add a node with a fresh id. Outer names used by `ports` are registered.
    pub fn add_node(
        &mut self,
        parent: Place,
        control: &str,
        label: Option<&str>,
        ports: Vec<LinkTarget>,
    ) -> Result<NodeId, BigraphError> {
        let id = NodeId(self.fresh_id());
        self.insert_node(id, parent, control, label.map(str::to_string), ports)?;
        Ok(id)
    }

    /// Add a node under a caller-chosen id, which must be unused.
    pub(crate) fn insert_node(
        &mut self,
        id: NodeId,
        parent: Place,
        control: &str,
        label: Option<String>,
        ports: Vec<LinkTarget>,
    ) -> Result<(), BigraphError> {
        let ctrl = self
            .b
            .signature
            .get(control)
            .ok_or_else(|| BigraphError::UnknownControl(control.to_string()))?;
        if ctrl.arity != ports.len() {
            return Err(BigraphError::ArityMismatch {
                control: control.to_string(),
                arity: ctrl.arity,
                ports: ports.len(),
            });
        }
        self.check_place(parent)?;
        for p in &ports {
            match p {
                LinkTarget::Outer(x) => {
                    self.b.interface.outer_names.insert(x.clone());
                }
                LinkTarget::Edge(e) => {
                    self.b.edges.insert(*e);
                }
            }
        }
        self.b.next_id = self.b.next_id.max(id.0 + 1);
        self.b.nodes.insert(
            id,
            Node { id, control: control.to_string(), label, ports },
        );
        self.b.parent.insert(Child::Node(id), parent);
        Ok(())
    }

    fn check_place(&self, place: Place) -> Result<(), BigraphError> {
        match place {
            Place::Root(r) if r < self.b.interface.roots => Ok(()),
            Place::Root(_) => Err(BigraphError::UnknownPlace(place)),
            Place::Node(n) => {
                let node = self.b.nodes.get(&n).ok_or(BigraphError::UnknownNode(n))?;
                match self.b.signature.get(&node.control) {
                    Some(c) if c.atomic => Err(BigraphError::AtomicParent(n)),
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn set_parent(&mut self, child: Child, parent: Place) -> Result<(), BigraphError> {
        self.check_place(parent)?;
        self.b.parent.insert(child, parent);
        Ok(())
    }

    pub fn set_label(&mut self, id: NodeId, label: Option<String>) -> Result<(), BigraphError> {
        let n = self.b.nodes.get_mut(&id).ok_or(BigraphError::UnknownNode(id))?;
        n.label = label;
        Ok(())
    }

    pub fn set_port(&mut self, id: NodeId, port: usize, target: LinkTarget) -> Result<(), BigraphError> {
        if let LinkTarget::Outer(x) = &target {
            self.b.interface.outer_names.insert(x.clone());
        }
        let n = self.b.nodes.get_mut(&id).ok_or(BigraphError::UnknownNode(id))?;
        match n.ports.get_mut(port) {
            Some(p) => {
                *p = target;
                Ok(())
            }
            None => Err(BigraphError::ArityMismatch {
                control: n.control.clone(),
                arity: n.ports.len(),
                ports: port + 1,
            }),
        }
    }

    /// Remove a node and its whole subtree. Sites below it are left dangling
    /// and must be re-parented by the caller.
    pub fn remove_subtree(&mut self, id: NodeId) -> Vec<NodeId> {
        self.b.reindex();
        let mut removed = vec![id];
        removed.extend(self.b.descendants(id));
        for n in &removed {
            self.b.nodes.remove(n);
            self.b.parent.remove(&Child::Node(*n));
        }
        removed
    }

    /// Remove a single node; its children are left for the caller to re-parent.
    pub fn remove_node(&mut self, id: NodeId) -> Option<Node> {
        self.b.parent.remove(&Child::Node(id));
        self.b.nodes.remove(&id)
    }

    pub fn remove_edge(&mut self, e: EdgeId) {
        self.b.edges.remove(&e);
    }

    pub fn remove_outer_name(&mut self, name: &str) {
        self.b.interface.outer_names.remove(name);
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.b.nodes.get(&id)
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.b.nodes.keys().copied().collect()
    }

    pub fn parent_of(&self, child: Child) -> Option<Place> {
        self.b.parent.get(&child).copied()
    }

    /// Current children of a place (recomputed).
    pub fn children_of(&self, place: Place) -> Vec<Child> {
        self.b
            .parent
            .iter()
            .filter(|(_, p)| **p == place)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn build_unchecked(mut self) -> Bigraph {
        self.b.reindex();
        self.b
    }

    pub fn build(self) -> Result<Bigraph, BigraphError> {
        let b = self.build_unchecked();
        let report = validate(&b);
        if report.is_valid() {
            Ok(b)
        } else {
            Err(BigraphError::Invalid(report))
        }
    }
}
