use std::collections::BTreeMap;

use super::{Bigraph, BigraphBuilder, BigraphError, Child, EdgeId, Interface, LinkTarget, Node, NodeId, Place};

struct Imported {
    edges: BTreeMap<EdgeId, EdgeId>,
    /// (source site index, parent in the target)
    sites: Vec<(usize, Place)>,
}

/// Copy every node and edge of `src` into `out` under fresh ids. Root-level
/// children are placed by `root_place`; ports on outer names are resolved by
/// `outer`. Sites are returned for the caller to place.
fn import(
    out: &mut BigraphBuilder,
    src: &Bigraph,
    root_place: &dyn Fn(usize) -> Place,
    outer: &dyn Fn(&str) -> LinkTarget,
) -> Imported {
    let mut nodes = BTreeMap::new();
    for id in src.nodes.keys() {
        nodes.insert(*id, NodeId(out.fresh_id()));
    }
    let mut edges = BTreeMap::new();
    for e in &src.edges {
        let fresh = EdgeId(out.fresh_id());
        out.b.edges.insert(fresh);
        edges.insert(*e, fresh);
    }
    let map_place = |p: &Place| match p {
        Place::Root(r) => root_place(*r),
        Place::Node(n) => Place::Node(nodes[n]),
    };
    for node in src.nodes.values() {
        let ports = node
            .ports
            .iter()
            .map(|l| match l {
                LinkTarget::Edge(e) => LinkTarget::Edge(edges[e]),
                LinkTarget::Outer(x) => outer(x),
            })
            .collect::<Vec<_>>();
        for p in &ports {
            if let LinkTarget::Outer(x) = p {
                out.b.interface.outer_names.insert(x.clone());
            }
        }
        let id = nodes[&node.id];
        out.b.nodes.insert(
            id,
            Node { id, control: node.control.clone(), label: node.label.clone(), ports },
        );
    }
    let mut sites = Vec::new();
    for (child, parent) in &src.parent {
        match child {
            Child::Node(n) => {
                out.b.parent.insert(Child::Node(nodes[n]), map_place(parent));
            }
            Child::Site(s) => sites.push((*s, map_place(parent))),
        }
    }
    sites.sort();
    Imported { edges, sites }
}

impl BigraphBuilder {
    pub(crate) fn fresh_id(&mut self) -> u64 {
        let id = self.b.next_id;
        self.b.next_id += 1;
        id
    }

    fn push_site(&mut self, parent: Place) {
        let s = self.b.interface.sites;
        self.b.interface.sites += 1;
        self.b.parent.insert(Child::Site(s), parent);
    }
}

fn face(sites: usize, names: &std::collections::BTreeSet<String>) -> String {
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    format!("<{},{{{}}}>", sites, names.join(","))
}

/// `outer ∘ inner`: inner's roots fill outer's sites index by index and
/// inner's outer names fuse with outer's inner names.
pub fn compose(outer: &Bigraph, inner: &Bigraph) -> Result<Bigraph, BigraphError> {
    let oi = &outer.interface;
    let ii = &inner.interface;
    if ii.roots != oi.sites || ii.outer_names != oi.inner_names {
        return Err(BigraphError::InterfaceMismatch {
            expected: face(oi.sites, &oi.inner_names),
            actual: face(ii.roots, &ii.outer_names),
        });
    }
    let mut b = BigraphBuilder::new(outer.signature.union(&inner.signature)?);
    b.b.interface = Interface {
        sites: 0,
        inner_names: Default::default(),
        roots: oi.roots,
        outer_names: oi.outer_names.clone(),
    };
    let from_outer = import(&mut b, outer, &Place::Root, &|x| LinkTarget::Outer(x.to_string()));
    let site_parent: BTreeMap<usize, Place> = from_outer.sites.iter().copied().collect();
    let fuse = |y: &str| match &outer.inner[y] {
        LinkTarget::Edge(e) => LinkTarget::Edge(from_outer.edges[e]),
        LinkTarget::Outer(z) => LinkTarget::Outer(z.clone()),
    };
    let from_inner = import(&mut b, inner, &|j| site_parent[&j], &fuse);
    for (_, parent) in &from_inner.sites {
        b.push_site(*parent);
    }
    for (x, t) in &inner.inner {
        let target = match t {
            LinkTarget::Edge(e) => LinkTarget::Edge(from_inner.edges[e]),
            LinkTarget::Outer(y) => fuse(y),
        };
        b.set_inner_name(x, target);
    }
    Ok(b.build_unchecked())
}

/// Parallel product: regions and sites side by side (left operand first),
/// shared outer names fused.
pub fn juxtapose(a: &Bigraph, b: &Bigraph) -> Result<Bigraph, BigraphError> {
    let sig = a.signature.union(&b.signature)?;
    if let Some(x) = a.interface.inner_names.intersection(&b.interface.inner_names).next() {
        return Err(BigraphError::InterfaceMismatch {
            expected: "disjoint inner names".into(),
            actual: format!("shared inner name `{x}`"),
        });
    }
    let mut out = BigraphBuilder::new(sig);
    out.b.interface.roots = a.interface.roots + b.interface.roots;
    for x in a.interface.outer_names.iter().chain(&b.interface.outer_names) {
        out.add_outer_name(x);
    }
    let keep = |x: &str| LinkTarget::Outer(x.to_string());
    let offset = a.interface.roots;
    for (src, roots) in [(a, 0usize), (b, offset)] {
        let imported = import(&mut out, src, &|r| Place::Root(r + roots), &keep);
        for (_, parent) in &imported.sites {
            out.push_site(*parent);
        }
        for (x, t) in &src.inner {
            let target = match t {
                LinkTarget::Edge(e) => LinkTarget::Edge(imported.edges[e]),
                LinkTarget::Outer(y) => LinkTarget::Outer(y.clone()),
            };
            out.set_inner_name(x, target);
        }
    }
    Ok(out.build_unchecked())
}

/// Plant the root contents of each prime `child` under the single site of
/// `parent_expr`, e.g. `A._` with `[B, C]` gives `A.(B | C)`.
pub fn merge_under(parent_expr: &Bigraph, children: &[Bigraph]) -> Result<Bigraph, BigraphError> {
    if parent_expr.interface.sites != 1 {
        return Err(BigraphError::InterfaceMismatch {
            expected: "exactly one site".into(),
            actual: format!("{} sites", parent_expr.interface.sites),
        });
    }
    let mut sig = parent_expr.signature.clone();
    for c in children {
        if c.interface.roots != 1 {
            return Err(BigraphError::NotPrime(c.interface.roots));
        }
        sig = sig.union(&c.signature)?;
    }
    let mut out = BigraphBuilder::new(sig);
    out.b.interface.roots = parent_expr.interface.roots;
    for x in &parent_expr.interface.outer_names {
        out.add_outer_name(x);
    }
    let keep = |x: &str| LinkTarget::Outer(x.to_string());
    let host = import(&mut out, parent_expr, &Place::Root, &keep);
    let hole = host.sites[0].1;
    let mut all = vec![(parent_expr, host.edges)];
    for c in children {
        for x in &c.interface.outer_names {
            out.add_outer_name(x);
        }
        let imported = import(&mut out, c, &|_| hole, &keep);
        for (_, parent) in &imported.sites {
            out.push_site(*parent);
        }
        all.push((c, imported.edges));
    }
    for (src, edges) in all {
        for (x, t) in &src.inner {
            if out.b.interface.inner_names.contains(x) {
                return Err(BigraphError::InterfaceMismatch {
                    expected: "disjoint inner names".into(),
                    actual: format!("shared inner name `{x}`"),
                });
            }
            let target = match t {
                LinkTarget::Edge(e) => LinkTarget::Edge(edges[e]),
                LinkTarget::Outer(y) => LinkTarget::Outer(y.clone()),
            };
            out.set_inner_name(x, target);
        }
    }
    Ok(out.build_unchecked())
}

/// `/x b`: every point on outer name `x` moves onto one fresh closed edge.
pub fn close_name(b: &Bigraph, x: &str) -> Result<Bigraph, BigraphError> {
    if !b.interface.outer_names.contains(x) {
        return Err(BigraphError::UnknownName(x.to_string()));
    }
    let mut out = b.edit();
    let e = out.add_edge();
    let target = LinkTarget::Outer(x.to_string());
    for node in out.b.nodes.values_mut() {
        for p in node.ports.iter_mut() {
            if *p == target {
                *p = LinkTarget::Edge(e);
            }
        }
    }
    for t in out.b.inner.values_mut() {
        if *t == target {
            *t = LinkTarget::Edge(e);
        }
    }
    out.remove_outer_name(x);
    Ok(out.build_unchecked())
}

/// Renumber sites so that new site `i` is old site `order[i]`.
pub fn permute_sites(b: &Bigraph, order: &[usize]) -> Result<Bigraph, BigraphError> {
    let n = b.interface.sites;
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|s| *s >= n || std::mem::replace(&mut seen[*s], true)) {
        return Err(BigraphError::InterfaceMismatch {
            expected: format!("a permutation of {n} sites"),
            actual: format!("{order:?}"),
        });
    }
    let mut raw = b.clone().into_raw();
    let old: Vec<Place> = (0..n).map(|s| raw.parent[&Child::Site(s)]).collect();
    for (new, old_idx) in order.iter().enumerate() {
        raw.parent.insert(Child::Site(new), old[*old_idx]);
    }
    Ok(Bigraph::from_raw(raw))
}
