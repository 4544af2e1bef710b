//! Brute-force reference matcher: enumerate every injective
//! control-preserving node map and test the occurrence conditions directly
//! on point sets. Shares no search code with the backtracking matcher.

use std::collections::{BTreeMap, BTreeSet};

use super::{check_solid, MatchError, Occurrence};
use crate::bigraph::{Bigraph, Child, LinkTarget, NodeId, Place};

pub const ORACLE_NODE_LIMIT: usize = 10;

fn subtree(b: &Bigraph, n: NodeId) -> Vec<NodeId> {
    let mut out = vec![n];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i];
        i += 1;
        for c in b.children_of(Place::Node(cur)) {
            if let Child::Node(k) = c {
                out.push(*k);
            }
        }
    }
    out
}

/// Full check of a candidate node map. Returns the occurrence it induces.
pub(crate) fn check_map(
    agent: &Bigraph,
    redex: &Bigraph,
    map: &BTreeMap<NodeId, NodeId>,
) -> Option<Occurrence> {
    let redex_ids: Vec<NodeId> = redex.node_ids().collect();
    if map.keys().copied().collect::<Vec<_>>() != redex_ids {
        return None;
    }
    let image: BTreeSet<NodeId> = map.values().copied().collect();
    if image.len() != map.len() {
        return None;
    }
    for (v, y) in map {
        let (rv, ay) = (redex.node(*v)?, agent.node(*y)?);
        if rv.control != ay.control {
            return None;
        }
        if rv.label.is_some() && rv.label != ay.label {
            return None;
        }
    }

    // place structure
    let mut root_places: Vec<Option<Place>> = vec![None; redex.interface().roots];
    for (v, y) in map {
        let ap = agent.parent_of(Child::Node(*y))?;
        match redex.parent_of(Child::Node(*v))? {
            Place::Node(u) => {
                if ap != Place::Node(map[&u]) {
                    return None;
                }
            }
            Place::Root(r) => {
                if root_places[r].is_some_and(|p| p != ap) {
                    return None;
                }
                root_places[r] = Some(ap);
            }
        }
    }

    // exactness and parameters
    let mut site_fill = BTreeMap::new();
    for (u, img) in map {
        let redex_kids: BTreeSet<NodeId> = redex
            .children_of(Place::Node(*u))
            .iter()
            .filter_map(|c| if let Child::Node(k) = c { Some(map[k]) } else { None })
            .collect();
        let site = redex
            .children_of(Place::Node(*u))
            .iter()
            .find_map(|c| if let Child::Site(s) = c { Some(*s) } else { None });
        let extra: Vec<NodeId> = agent
            .children_of(Place::Node(*img))
            .iter()
            .filter_map(|c| if let Child::Node(k) = c { Some(*k) } else { None })
            .filter(|k| !redex_kids.contains(k))
            .collect();
        match site {
            None => {
                if !extra.is_empty() {
                    return None;
                }
            }
            Some(s) => {
                let param: Vec<NodeId> = extra.iter().flat_map(|k| subtree(agent, *k)).collect();
                if param.iter().any(|p| image.contains(p)) {
                    return None;
                }
                site_fill.insert(s, extra);
            }
        }
    }

    // links, via point sets
    let mut redex_links: BTreeMap<LinkTarget, BTreeSet<(NodeId, usize)>> = BTreeMap::new();
    for n in redex.nodes() {
        for (i, l) in n.ports.iter().enumerate() {
            redex_links.entry(l.clone()).or_default().insert((n.id, i));
        }
    }
    let mut agent_links: BTreeMap<LinkTarget, BTreeSet<(NodeId, usize)>> = BTreeMap::new();
    for n in agent.nodes() {
        for (i, l) in n.ports.iter().enumerate() {
            agent_links.entry(l.clone()).or_default().insert((n.id, i));
        }
    }
    let agent_link_of = |(n, i): (NodeId, usize)| agent.node(n).map(|node| node.ports[i].clone());
    let mut link_map = BTreeMap::new();
    for (l, points) in &redex_links {
        let targets: BTreeSet<LinkTarget> =
            points.iter().map(|(n, i)| agent_link_of((map[n], *i))).collect::<Option<_>>()?;
        if targets.len() != 1 {
            return None;
        }
        let target = targets.into_iter().next()?;
        if let LinkTarget::Edge(_) = l {
            if !matches!(target, LinkTarget::Edge(_)) {
                return None;
            }
            let image_points: BTreeSet<(NodeId, usize)> = points.iter().map(|(n, i)| (map[n], *i)).collect();
            if agent_links.get(&target) != Some(&image_points) {
                return None;
            }
        }
        link_map.insert(l.clone(), target);
    }

    Some(Occurrence {
        node_map: map.clone(),
        site_fill,
        link_map,
        root_places: root_places.into_iter().collect::<Option<Vec<_>>>()?,
    })
}

/// Reference enumeration of all occurrences, for agents of at most
/// [`ORACLE_NODE_LIMIT`] nodes.
pub fn oracle_occurrences(agent: &Bigraph, redex: &Bigraph) -> Result<Vec<Occurrence>, MatchError> {
    if agent.node_count() > ORACLE_NODE_LIMIT {
        return Err(MatchError::SizeLimit(agent.node_count()));
    }
    check_solid(redex)?;
    if !agent.is_ground() {
        return Err(MatchError::AgentNotGround);
    }
    let redex_ids: Vec<NodeId> = redex.node_ids().collect();
    let agent_ids: Vec<NodeId> = agent.node_ids().collect();
    let mut found = Vec::new();
    let mut current: Vec<NodeId> = Vec::new();

    fn enumerate(
        depth: usize,
        redex_ids: &[NodeId],
        agent_ids: &[NodeId],
        agent: &Bigraph,
        redex: &Bigraph,
        current: &mut Vec<NodeId>,
        found: &mut Vec<Occurrence>,
    ) {
        if depth == redex_ids.len() {
            let map: BTreeMap<NodeId, NodeId> = redex_ids.iter().copied().zip(current.iter().copied()).collect();
            if let Some(occ) = check_map(agent, redex, &map) {
                found.push(occ);
            }
            return;
        }
        let control = &redex.node(redex_ids[depth]).expect("redex node").control;
        for y in agent_ids {
            if current.contains(y) || &agent.node(*y).expect("agent node").control != control {
                continue;
            }
            current.push(*y);
            enumerate(depth + 1, redex_ids, agent_ids, agent, redex, current, found);
            current.pop();
        }
    }

    enumerate(0, &redex_ids, &agent_ids, agent, redex, &mut current, &mut found);
    found.sort_by_key(Occurrence::key);
    Ok(found)
}
