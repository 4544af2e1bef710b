use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use super::{Bigraph, Child, EdgeId, LinkTarget, NodeId, Place};

/// Site classes below `p`, sorted.
fn site_classes(b: &Bigraph, p: Place, class: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = b
        .children_of(p)
        .iter()
        .filter_map(|c| if let Child::Site(s) = c { Some(class[*s]) } else { None })
        .collect();
    v.sort_unstable();
    v
}

/// Structural hash of a node's subtree: control, label, port shape, site
/// classes and the multiset of child hashes. Independent of node ids.
fn subtree_hashes(b: &Bigraph, class: &[usize]) -> HashMap<NodeId, u64> {
    fn go(b: &Bigraph, id: NodeId, class: &[usize], memo: &mut HashMap<NodeId, u64>) -> u64 {
        if let Some(h) = memo.get(&id) {
            return *h;
        }
        let node = &b.nodes[&id];
        let mut kids = Vec::new();
        let mut sites = Vec::new();
        for c in b.children_of(Place::Node(id)) {
            match c {
                Child::Node(n) => kids.push(go(b, *n, class, memo)),
                Child::Site(s) => sites.push(class[*s]),
            }
        }
        kids.sort_unstable();
        sites.sort_unstable();
        let mut h = DefaultHasher::new();
        node.control.hash(&mut h);
        node.label.hash(&mut h);
        for p in &node.ports {
            match p {
                LinkTarget::Edge(_) => 0u8.hash(&mut h),
                LinkTarget::Outer(x) => {
                    1u8.hash(&mut h);
                    x.hash(&mut h);
                }
            }
        }
        sites.hash(&mut h);
        kids.hash(&mut h);
        let v = h.finish();
        memo.insert(id, v);
        v
    }
    let mut memo = HashMap::new();
    for id in b.nodes.keys() {
        go(b, *id, class, &mut memo);
    }
    memo
}

struct Search<'a> {
    class: &'a [usize],
    a: &'a Bigraph,
    b: &'a Bigraph,
    ha: HashMap<NodeId, u64>,
    hb: HashMap<NodeId, u64>,
    order: Vec<NodeId>,
    nmap: BTreeMap<NodeId, NodeId>,
    used: BTreeMap<NodeId, NodeId>,
    emap: BTreeMap<EdgeId, EdgeId>,
    erev: BTreeMap<EdgeId, EdgeId>,
}

impl Search<'_> {
    fn image_place(&self, p: Place) -> Place {
        match p {
            Place::Root(r) => Place::Root(r),
            Place::Node(n) => Place::Node(self.nmap[&n]),
        }
    }

    /// Try to bind the ports of `x` to those of `y`; returns the edges newly
    /// bound so they can be undone.
    fn bind_ports(&mut self, x: NodeId, y: NodeId) -> Option<Vec<EdgeId>> {
        let mut added = Vec::new();
        let px = &self.a.nodes[&x].ports;
        let py = &self.b.nodes[&y].ports;
        for (l, r) in px.iter().zip(py) {
            let ok = match (l, r) {
                (LinkTarget::Outer(m), LinkTarget::Outer(n)) => m == n,
                (LinkTarget::Edge(e), LinkTarget::Edge(f)) => match (self.emap.get(e), self.erev.get(f)) {
                    (Some(g), _) => g == f,
                    (None, None) => {
                        self.emap.insert(*e, *f);
                        self.erev.insert(*f, *e);
                        added.push(*e);
                        true
                    }
                    (None, Some(_)) => false,
                },
                _ => false,
            };
            if !ok {
                self.unbind(&added);
                return None;
            }
        }
        Some(added)
    }

    fn unbind(&mut self, added: &[EdgeId]) {
        for e in added {
            if let Some(f) = self.emap.remove(e) {
                self.erev.remove(&f);
            }
        }
    }

    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return self.inner_names_agree();
        }
        let x = self.order[depth];
        let parent = self.image_place(self.a.parent[&Child::Node(x)]);
        let hx = self.ha[&x];
        let candidates: Vec<NodeId> = self
            .b
            .node_children(parent)
            .filter(|y| self.hb[y] == hx && !self.used.contains_key(y))
            .filter(|y| site_classes(self.a, Place::Node(x), self.class) == site_classes(self.b, Place::Node(*y), self.class))
            .collect();
        for y in candidates {
            if let Some(added) = self.bind_ports(x, y) {
                self.nmap.insert(x, y);
                self.used.insert(y, x);
                if self.run(depth + 1) {
                    return true;
                }
                self.nmap.remove(&x);
                self.used.remove(&y);
                self.unbind(&added);
            }
        }
        false
    }

    fn inner_names_agree(&mut self) -> bool {
        let mut added = Vec::new();
        for (x, l) in &self.a.inner {
            let ok = match (l, &self.b.inner[x]) {
                (LinkTarget::Outer(m), LinkTarget::Outer(n)) => m == n,
                (LinkTarget::Edge(e), LinkTarget::Edge(f)) => match (self.emap.get(e), self.erev.get(f)) {
                    (Some(g), _) => g == f,
                    (None, None) => {
                        self.emap.insert(*e, *f);
                        self.erev.insert(*f, *e);
                        added.push(*e);
                        true
                    }
                    _ => false,
                },
                _ => false,
            };
            if !ok {
                self.unbind(&added);
                return false;
            }
        }
        true
    }
}

/// Structural equality up to renaming of node and edge ids. Interface
/// indices (roots, sites) and outer/inner names are fixed.
pub fn iso_eq(a: &Bigraph, b: &Bigraph) -> bool {
    let identity: Vec<usize> = (0..a.interface.sites).collect();
    iso_eq_up_to_sites(a, b, &identity)
}

/// As [`iso_eq`], but sites may be permuted among those sharing a class:
/// `class[s]` is the class of site `s` in both bigraphs.
pub fn iso_eq_up_to_sites(a: &Bigraph, b: &Bigraph, class: &[usize]) -> bool {
    if a.interface != b.interface
        || class.len() != a.interface.sites
        || a.nodes.len() != b.nodes.len()
        || a.edges.len() != b.edges.len()
        || a.inner.keys().ne(b.inner.keys())
    {
        return false;
    }
    for r in 0..a.interface.roots {
        if site_classes(a, Place::Root(r), class) != site_classes(b, Place::Root(r), class) {
            return false;
        }
    }
    let ha = subtree_hashes(a, class);
    let hb = subtree_hashes(b, class);
    for r in 0..a.interface.roots {
        let mut xs: Vec<u64> = a.node_children(Place::Root(r)).map(|n| ha[&n]).collect();
        let mut ys: Vec<u64> = b.node_children(Place::Root(r)).map(|n| hb[&n]).collect();
        xs.sort_unstable();
        ys.sort_unstable();
        if xs != ys {
            return false;
        }
    }
    // parents before children
    let mut order = Vec::with_capacity(a.nodes.len());
    let mut queue: Vec<Place> = (0..a.interface.roots).map(Place::Root).collect();
    let mut i = 0;
    while i < queue.len() {
        let p = queue[i];
        i += 1;
        for n in a.node_children(p) {
            order.push(n);
            queue.push(Place::Node(n));
        }
    }
    if order.len() != a.nodes.len() {
        return false;
    }
    let mut search = Search {
        class,
        a,
        b,
        ha,
        hb,
        order,
        nmap: BTreeMap::new(),
        used: BTreeMap::new(),
        emap: BTreeMap::new(),
        erev: BTreeMap::new(),
    };
    search.run(0)
}
