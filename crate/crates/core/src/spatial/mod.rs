//! Place graphs built from building scans, spatially scoped names, and
//! scoped views of a bigraph.

mod scan;
mod scope;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bigraph::{Bigraph, BigraphError, NodeId, Place};

pub use scan::{ingest_scan, normalize_label, ControlDecl, Device, ScanDocument, ScanEntry, DEFAULT_CATEGORIES};
pub use scope::{extract_scope, reattach, ScopedView};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SpatialError {
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unknown control `{0}`")]
    UnknownControl(String),
    #[error("label `{0}` appears twice under the same parent")]
    DuplicateSiblingLabel(String),
    #[error("device `{device}`: control `{control}` has arity {arity} but {links} links were given")]
    ArityMismatch { device: String, control: String, arity: usize, links: usize },
    #[error("label `{0}` is not a valid name segment")]
    InvalidLabel(String),
    #[error("node {0} has no label")]
    MissingLabel(NodeId),
    #[error("no node is named `{0}`")]
    NotFound(String),
    #[error("`{0}` names more than one node")]
    Ambiguous(String),
    #[error("invalid spatial name `{0}`")]
    InvalidName(String),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("scope node {0} is atomic")]
    AtomicScope(NodeId),
    #[error("scope node {0} is no longer present")]
    ScopeMissing(NodeId),
    #[error("outer name `{0}` is not a boundary name of this view")]
    UnknownBoundaryName(String),
    #[error("scan document is not valid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Bigraph(#[from] BigraphError),
}

pub fn valid_segment(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

/// Label path, leaf first; displayed dot-joined.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpatialName {
    segments: Vec<String>,
}

impl SpatialName {
    pub fn new(segments: Vec<String>) -> Result<Self, SpatialError> {
        if segments.is_empty() || !segments.iter().all(|s| valid_segment(s)) {
            return Err(SpatialError::InvalidName(segments.join(".")));
        }
        Ok(SpatialName { segments })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn leaf(&self) -> &str {
        &self.segments[0]
    }

    /// Whether `self` lies at or below `scope`: the scope's path is a
    /// suffix of this one, segment by segment.
    pub fn within(&self, scope: &SpatialName) -> bool {
        self.segments.len() >= scope.segments.len() && self.segments.ends_with(&scope.segments)
    }
}

impl fmt::Display for SpatialName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segments.join("."))
    }
}

impl FromStr for SpatialName {
    type Err = SpatialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpatialName::new(s.split('.').map(str::to_string).collect())
    }
}

/// Node label followed by the labels of every place ancestor up to the root.
pub fn spatial_name(b: &Bigraph, node: NodeId) -> Result<SpatialName, SpatialError> {
    let n = b.node(node).ok_or(SpatialError::UnknownNode(node))?;
    let mut segments = vec![n.label.clone().ok_or(SpatialError::MissingLabel(node))?];
    for p in b.ancestors(node) {
        if let Place::Node(a) = p {
            let label = b.node(a).and_then(|x| x.label.clone()).ok_or(SpatialError::MissingLabel(a))?;
            segments.push(label);
        }
    }
    SpatialName::new(segments)
}

pub fn resolve(b: &Bigraph, name: &SpatialName) -> Result<NodeId, SpatialError> {
    let mut hits = b
        .nodes()
        .filter(|n| n.label.as_deref() == Some(name.leaf()))
        .filter(|n| spatial_name(b, n.id).as_ref() == Ok(name))
        .map(|n| n.id);
    match (hits.next(), hits.next()) {
        (None, _) => Err(SpatialError::NotFound(name.to_string())),
        (Some(id), None) => Ok(id),
        (Some(_), Some(_)) => Err(SpatialError::Ambiguous(name.to_string())),
    }
}

/// Every nameable node, sorted by name.
pub fn all_names(b: &Bigraph) -> Vec<(SpatialName, NodeId)> {
    let mut out: Vec<(SpatialName, NodeId)> =
        b.nodes().filter_map(|n| spatial_name(b, n.id).ok().map(|s| (s, n.id))).collect();
    out.sort_by(|a, b| a.0.to_string().cmp(&b.0.to_string()).then(a.1.cmp(&b.1)));
    out
}
