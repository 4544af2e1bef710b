//! Deterministic JSON form of a bigraph, used for traces and hashing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Bigraph, Child, Control, EdgeId, Interface, LinkTarget, Node, NodeId, Place, RawBigraph, Signature};

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("malformed bigraph document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed place reference `{0}`")]
    BadPlace(String),
    #[error("bad signature: {0}")]
    Signature(#[from] super::BigraphError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum PortDoc {
    #[serde(rename = "edge")]
    Edge(u64),
    #[serde(rename = "name")]
    Name(String),
}

// Field order is alphabetical so serde emits sorted keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ControlDoc {
    arity: usize,
    atomic: bool,
    name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct NodeDoc {
    control: String,
    id: u64,
    label: Option<String>,
    ports: Vec<PortDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct InterfaceDoc {
    inner_names: BTreeSet<String>,
    outer_names: BTreeSet<String>,
    roots: usize,
    sites: usize,
}

/// `{edges, inner, interface, nodes, parents, signature}` with sorted keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalDoc {
    edges: Vec<u64>,
    inner: BTreeMap<String, PortDoc>,
    interface: InterfaceDoc,
    nodes: Vec<NodeDoc>,
    parents: BTreeMap<String, String>,
    signature: Vec<ControlDoc>,
}

fn port_doc(l: &LinkTarget) -> PortDoc {
    match l {
        LinkTarget::Edge(e) => PortDoc::Edge(e.0),
        LinkTarget::Outer(x) => PortDoc::Name(x.clone()),
    }
}

fn port_from(p: &PortDoc) -> LinkTarget {
    match p {
        PortDoc::Edge(e) => LinkTarget::Edge(EdgeId(*e)),
        PortDoc::Name(x) => LinkTarget::Outer(x.clone()),
    }
}

fn parse_index(s: &str, prefix: char) -> Option<u64> {
    s.strip_prefix(prefix)?.parse().ok()
}

impl CanonicalDoc {
    pub fn from_bigraph(b: &Bigraph) -> Self {
        CanonicalDoc {
            edges: b.edges.iter().map(|e| e.0).collect(),
            inner: b.inner.iter().map(|(k, v)| (k.clone(), port_doc(v))).collect(),
            interface: InterfaceDoc {
                inner_names: b.interface.inner_names.clone(),
                outer_names: b.interface.outer_names.clone(),
                roots: b.interface.roots,
                sites: b.interface.sites,
            },
            nodes: b
                .nodes
                .values()
                .map(|n| NodeDoc {
                    control: n.control.clone(),
                    id: n.id.0,
                    label: n.label.clone(),
                    ports: n.ports.iter().map(port_doc).collect(),
                })
                .collect(),
            parents: b.parent.iter().map(|(c, p)| (c.to_string(), p.to_string())).collect(),
            signature: b
                .signature
                .iter()
                .map(|c| ControlDoc { arity: c.arity, atomic: c.atomic, name: c.name.clone() })
                .collect(),
        }
    }

    pub fn to_bigraph(&self) -> Result<Bigraph, CanonicalError> {
        let signature =
            Signature::from_controls(self.signature.iter().map(|c| Control::new(c.name.clone(), c.arity, c.atomic)))?;
        let mut parent = BTreeMap::new();
        for (c, p) in &self.parents {
            let child = if let Some(n) = parse_index(c, 'n') {
                Child::Node(NodeId(n))
            } else if let Some(s) = parse_index(c, 's') {
                Child::Site(s as usize)
            } else {
                return Err(CanonicalError::BadPlace(c.clone()));
            };
            let place = if let Some(n) = parse_index(p, 'n') {
                Place::Node(NodeId(n))
            } else if let Some(r) = parse_index(p, 'r') {
                Place::Root(r as usize)
            } else {
                return Err(CanonicalError::BadPlace(p.clone()));
            };
            parent.insert(child, place);
        }
        let raw = RawBigraph {
            signature,
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let id = NodeId(n.id);
                    (
                        id,
                        Node {
                            id,
                            control: n.control.clone(),
                            label: n.label.clone(),
                            ports: n.ports.iter().map(port_from).collect(),
                        },
                    )
                })
                .collect(),
            parent,
            inner: self.inner.iter().map(|(k, v)| (k.clone(), port_from(v))).collect(),
            interface: Interface {
                sites: self.interface.sites,
                inner_names: self.interface.inner_names.clone(),
                roots: self.interface.roots,
                outer_names: self.interface.outer_names.clone(),
            },
            edges: self.edges.iter().map(|e| EdgeId(*e)).collect(),
            next_id: 0,
        };
        Ok(Bigraph::from_raw(raw))
    }
}

impl Bigraph {
    /// Compact canonical JSON, byte-stable for equal values.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&CanonicalDoc::from_bigraph(self)).expect("canonical doc serializes")
    }

    pub fn from_canonical_json(s: &str) -> Result<Bigraph, CanonicalError> {
        let doc: CanonicalDoc = serde_json::from_str(s)?;
        doc.to_bigraph()
    }

    /// SHA-256 of the canonical JSON, lowercase hex.
    pub fn canonical_hash(&self) -> String {
        crate::hash::sha256_hex(self.canonical_json().as_bytes())
    }

    /// Id-independent description of a subtree; used to order siblings.
    pub fn subtree_key(&self, id: NodeId) -> String {
        let node = &self.nodes[&id];
        let mut out = node.control.clone();
        if let Some(l) = &node.label {
            out.push(':');
            out.push_str(l);
        }
        out.push('{');
        let ports: Vec<String> = node
            .ports
            .iter()
            .map(|p| match p {
                LinkTarget::Edge(_) => "~".to_string(),
                LinkTarget::Outer(x) => x.clone(),
            })
            .collect();
        out.push_str(&ports.join(","));
        out.push('}');
        let kids = self.canonical_children(Place::Node(id));
        if !kids.is_empty() {
            out.push('(');
            let parts: Vec<String> = kids
                .iter()
                .map(|c| match c {
                    Child::Site(s) => format!("${s}"),
                    Child::Node(n) => self.subtree_key(*n),
                })
                .collect();
            out.push_str(&parts.join("|"));
            out.push(')');
        }
        out
    }

    /// Children in canonical order: nodes by subtree key (ties by id), then
    /// sites by index.
    pub fn canonical_children(&self, place: Place) -> Vec<Child> {
        let mut nodes: Vec<(String, NodeId)> =
            self.node_children(place).map(|n| (self.subtree_key(n), n)).collect();
        nodes.sort();
        let mut out: Vec<Child> = nodes.into_iter().map(|(_, n)| Child::Node(n)).collect();
        out.extend(self.children_of(place).iter().filter(|c| matches!(c, Child::Site(_))));
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::bigraph::{iso_eq, Bigraph, BigraphBuilder, Control, LinkTarget, Place, Signature};

    fn sample() -> Bigraph {
        let sig = Signature::from_controls([Control::new("Room", 0, false), Control::new("Dev", 1, true)]).unwrap();
        let mut b = BigraphBuilder::new(sig);
        let r = b.add_root();
        let room = b.add_node(Place::Root(r), "Room", Some("room-a"), vec![]).unwrap();
        let e = b.add_edge();
        b.add_node(Place::Node(room), "Dev", Some("d1"), vec![LinkTarget::Edge(e)]).unwrap();
        b.add_node(Place::Node(room), "Dev", None, vec![LinkTarget::Outer("x".into())]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let b = sample();
        let s = b.canonical_json();
        assert!(s.starts_with("{\"edges\":"));
        assert!(s.contains("\"parents\":{"));
        let back = Bigraph::from_canonical_json(&s).unwrap();
        assert_eq!(back.canonical_json(), s);
        assert!(iso_eq(&b, &back));
    }

    #[test]
    fn hash_is_stable() {
        let h = sample().canonical_hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, sample().canonical_hash());
        assert!(h.chars().all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c)));
    }
}
