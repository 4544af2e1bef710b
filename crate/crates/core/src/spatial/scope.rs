use std::collections::{BTreeMap, BTreeSet};

use super::SpatialError;
use crate::bigraph::{Bigraph, BigraphBuilder, Child, EdgeId, LinkTarget, NodeId, Place};

/// A ground, single-region copy of one place and everything below it.
/// Links that also reach outside the place appear as outer names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopedView {
    pub view: Bigraph,
    /// View outer name → link of the original bigraph.
    pub boundary: BTreeMap<String, LinkTarget>,
    pub origin: NodeId,
}

pub fn extract_scope(b: &Bigraph, place: NodeId) -> Result<ScopedView, SpatialError> {
    let ctrl = b.control_of(place).ok_or(SpatialError::UnknownNode(place))?;
    if ctrl.atomic {
        return Err(SpatialError::AtomicScope(place));
    }
    let mut inside: Vec<NodeId> = vec![place];
    inside.extend(b.descendants(place));
    let inside_set: BTreeSet<NodeId> = inside.iter().copied().collect();

    // links touched from inside, with their first interior point
    let mut crossing: Vec<(LinkTarget, (NodeId, usize))> = Vec::new();
    for (link, points) in b.link_points() {
        let interior: Vec<&(NodeId, usize)> = points.iter().filter(|(n, _)| inside_set.contains(n)).collect();
        let Some(first) = interior.iter().min() else { continue };
        let escapes = interior.len() < points.len() || matches!(link, LinkTarget::Outer(_));
        if escapes {
            crossing.push((link, **first));
        }
    }
    crossing.sort();
    let mut boundary = BTreeMap::new();
    let mut rename: BTreeMap<LinkTarget, LinkTarget> = BTreeMap::new();
    for (k, (link, _)) in crossing.into_iter().enumerate() {
        let name = format!("bnd-{k}");
        rename.insert(link.clone(), LinkTarget::Outer(name.clone()));
        boundary.insert(name, link);
    }

    let mut vb = BigraphBuilder::new(b.signature().clone());
    vb.reserve_ids(b.next_fresh_id());
    let root = vb.add_root();
    for n in &inside {
        let node = b.node(*n).expect("inside node");
        let parent = if *n == place { Place::Root(root) } else { b.parent_of(Child::Node(*n)).expect("parent") };
        let ports = node.ports.iter().map(|l| rename.get(l).cloned().unwrap_or_else(|| l.clone())).collect();
        vb.insert_node(*n, parent, &node.control, node.label.clone(), ports)?;
    }
    for name in boundary.keys() {
        vb.add_outer_name(name);
    }
    Ok(ScopedView { view: vb.build()?, boundary, origin: place })
}

/// Put a (possibly rewritten) view back in place of its origin subtree.
/// Boundary names rejoin their recorded links; ids already taken in `b`
/// are renumbered.
pub fn reattach(b: &Bigraph, view: &ScopedView) -> Result<Bigraph, SpatialError> {
    let origin = view.origin;
    let parent = b.parent_of(Child::Node(origin)).ok_or(SpatialError::ScopeMissing(origin))?;
    for x in &view.view.interface().outer_names {
        if !view.boundary.contains_key(x) {
            return Err(SpatialError::UnknownBoundaryName(x.clone()));
        }
    }
    if let Some(target) = view.boundary.values().find(|l| match l {
        LinkTarget::Edge(e) => !b.edges().contains(e),
        LinkTarget::Outer(x) => !b.interface().outer_names.contains(x),
    }) {
        return Err(SpatialError::UnknownBoundaryName(format!("{target:?}")));
    }

    let mut removed: BTreeSet<NodeId> = BTreeSet::from([origin]);
    removed.extend(b.descendants(origin));
    let points = b.link_points();
    let mut out = b.edit();
    out.reserve_ids(view.view.next_fresh_id());
    for n in &removed {
        out.remove_node(*n);
    }
    // edges that lived entirely inside the old subtree
    for e in b.edges() {
        let pts = &points[&LinkTarget::Edge(*e)];
        if !pts.is_empty() && pts.iter().all(|(n, _)| removed.contains(n)) {
            out.remove_edge(*e);
        }
    }

    let taken = |out: &BigraphBuilder, id: u64| out.node(NodeId(id)).is_some() || out.b.edges.contains(&EdgeId(id));
    let mut edge_map: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    for e in view.view.edges() {
        let fresh = if taken(&out, e.0) { out.add_edge() } else { *e };
        out.b.edges.insert(fresh);
        edge_map.insert(*e, fresh);
    }
    let mut queue: Vec<(NodeId, Place)> = view.view.node_children(Place::Root(0)).map(|n| (n, parent)).collect();
    let mut i = 0;
    while i < queue.len() {
        let (n, at) = queue[i];
        i += 1;
        let node = view.view.node(n).expect("view node");
        let id = if taken(&out, n.0) { NodeId(out.fresh_id()) } else { n };
        let ports = node
            .ports
            .iter()
            .map(|l| match l {
                LinkTarget::Edge(e) => LinkTarget::Edge(edge_map[e]),
                LinkTarget::Outer(x) => view.boundary[x].clone(),
            })
            .collect();
        out.insert_node(id, at, &node.control, node.label.clone(), ports)?;
        queue.extend(view.view.node_children(Place::Node(n)).map(|c| (c, Place::Node(id))));
    }
    Ok(out.build()?)
}
