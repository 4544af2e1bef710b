//! Seeded generators shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spatial_brs::bigraph::{Bigraph, BigraphBuilder, Child, Control, LinkTarget, NodeId, Place, Signature};
use spatial_brs::matching::check_solid;
use spatial_brs::rewrite::ReactionRule;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A (0, open), B (1, open), C (2, atomic), D (0, atomic), E (1, atomic),
/// F (0, open), G (1, atomic). F and G share a shape with A and E.
pub fn sig() -> Signature {
    Signature::from_controls([
        Control::new("A", 0, false),
        Control::new("B", 1, false),
        Control::new("C", 2, true),
        Control::new("D", 0, true),
        Control::new("E", 1, true),
        Control::new("F", 0, false),
        Control::new("G", 1, true),
    ])
    .unwrap()
}

const LABELS: [&str; 3] = ["p", "q", "r"];

/// Ground bigraph with 1..=max_nodes nodes over [`sig`], one or two
/// regions, a few shared edges and possibly outer names.
pub fn agent(r: &mut impl Rng, max_nodes: usize) -> Bigraph {
    let sig = sig();
    let controls: Vec<Control> = sig.iter().cloned().collect();
    let mut b = BigraphBuilder::new(sig);
    let mut places = vec![];
    for _ in 0..r.gen_range(1..=2) {
        places.push(Place::Root(b.add_root()));
    }
    let mut links: Vec<LinkTarget> = (0..r.gen_range(1..=3)).map(|_| LinkTarget::Edge(b.add_edge())).collect();
    if r.gen_bool(0.3) {
        links.push(LinkTarget::Outer("x".into()));
    }
    for _ in 0..r.gen_range(1..=max_nodes) {
        let c = controls.choose(r).unwrap();
        let parent = *places.choose(r).unwrap();
        let ports = (0..c.arity).map(|_| links.choose(r).unwrap().clone()).collect();
        let label = if r.gen_bool(0.3) { Some(*LABELS.choose(r).unwrap()) } else { None };
        let n = b.add_node(parent, &c.name, label, ports).unwrap();
        if !c.atomic {
            places.push(Place::Node(n));
        }
    }
    b.build().unwrap()
}

fn subtree(b: &Bigraph, n: NodeId) -> BTreeSet<NodeId> {
    let mut s: BTreeSet<NodeId> = b.descendants(n).into_iter().collect();
    s.insert(n);
    s
}

/// A solid redex cut out of `agent` (so it often matches), occasionally
/// perturbed so it often does not. At most `max_nodes` nodes.
pub fn redex_from(r: &mut impl Rng, agent: &Bigraph, max_nodes: usize) -> Option<Bigraph> {
    let ids: Vec<NodeId> = agent.node_ids().collect();
    let first = *ids.choose(r)?;
    let mut tops = vec![first];
    if r.gen_bool(0.25) {
        let blocked: BTreeSet<NodeId> = subtree(agent, first)
            .into_iter()
            .chain(agent.ancestors(first).into_iter().filter_map(|p| if let Place::Node(n) = p { Some(n) } else { None }))
            .collect();
        let free: Vec<NodeId> = ids.iter().copied().filter(|n| !blocked.contains(n)).collect();
        if let Some(second) = free.choose(r) {
            tops.push(*second);
        }
    }
    // grow each region downwards
    let mut keep: Vec<Vec<NodeId>> = Vec::new();
    let mut total = 0;
    for t in &tops {
        if total == max_nodes {
            break;
        }
        let mut region = vec![*t];
        total += 1;
        let mut i = 0;
        while i < region.len() {
            let here = region[i];
            i += 1;
            for c in agent.node_children(Place::Node(here)) {
                if total < max_nodes && r.gen_bool(0.6) {
                    region.push(c);
                    total += 1;
                }
            }
        }
        keep.push(region);
    }
    let kept: BTreeSet<NodeId> = keep.iter().flatten().copied().collect();
    let points = agent.link_points();

    let mut rb = BigraphBuilder::new(agent.signature().clone());
    let mut link_for: BTreeMap<LinkTarget, LinkTarget> = BTreeMap::new();
    let mut next_name = 0;
    let mut copy: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let ctrl_names: Vec<Control> = agent.signature().iter().cloned().collect();
    for region in &keep {
        let root = rb.add_root();
        for n in region {
            let node = agent.node(*n).unwrap();
            let parent = match agent.parent_of(Child::Node(*n)) {
                Some(Place::Node(p)) if kept.contains(&p) => Place::Node(copy[&p]),
                _ => Place::Root(root),
            };
            let ports = node
                .ports
                .iter()
                .map(|l| {
                    link_for
                        .entry(l.clone())
                        .or_insert_with(|| {
                            let inside = matches!(l, LinkTarget::Edge(_)) && points[l].iter().all(|(m, _)| kept.contains(m));
                            if inside && r.gen_bool(0.7) {
                                LinkTarget::Edge(rb.add_edge())
                            } else {
                                next_name += 1;
                                LinkTarget::Outer(format!("l{next_name}"))
                            }
                        })
                        .clone()
                })
                .collect();
            let mut control = node.control.clone();
            if r.gen_bool(0.08) {
                let same: Vec<&Control> = ctrl_names
                    .iter()
                    .filter(|c| {
                        let k = agent.signature().get(&control).unwrap();
                        c.arity == k.arity && c.atomic == k.atomic
                    })
                    .collect();
                control = same.choose(r).unwrap().name.clone();
            }
            let label = if r.gen_bool(0.2) { node.label.clone() } else { None };
            let id = rb.add_node(parent, &control, label.as_deref(), ports).ok()?;
            copy.insert(*n, id);
        }
    }
    // one site under every kept place that has unkept children, sometimes elsewhere
    for n in &kept {
        if agent.control_of(*n).unwrap().atomic {
            continue;
        }
        let loose = agent.node_children(Place::Node(*n)).any(|c| !kept.contains(&c));
        if loose || r.gen_bool(0.25) {
            rb.add_site(Place::Node(copy[n]));
        }
    }
    let redex = rb.build().ok()?;
    check_solid(&redex).ok()?;
    Some(redex)
}

/// Reactum for `redex`: same number of regions, only the redex's outer
/// names, fresh closed edges, and sites instantiated from redex sites.
pub fn reactum_for(r: &mut impl Rng, redex: &Bigraph) -> (Bigraph, Vec<usize>) {
    let sig = redex.signature().clone();
    let controls: Vec<Control> = sig.iter().cloned().collect();
    let names: Vec<String> = redex.interface().outer_names.iter().cloned().collect();
    let mut b = BigraphBuilder::new(sig);
    let mut places = vec![];
    for _ in 0..redex.interface().roots {
        places.push(Place::Root(b.add_root()));
    }
    let mut links: Vec<LinkTarget> = names.iter().map(|x| LinkTarget::Outer(x.clone())).collect();
    links.push(LinkTarget::Edge(b.add_edge()));
    for _ in 0..r.gen_range(0..=3) {
        let c = controls.choose(r).unwrap();
        let parent = *places.choose(r).unwrap();
        let ports = (0..c.arity).map(|_| links.choose(r).unwrap().clone()).collect();
        let label = if r.gen_bool(0.2) { Some("fresh") } else { None };
        let n = b.add_node(parent, &c.name, label, ports).unwrap();
        if !c.atomic {
            places.push(Place::Node(n));
        }
    }
    let mut eta = Vec::new();
    let sites = redex.interface().sites;
    if sites > 0 {
        for _ in 0..r.gen_range(0..=sites + 1) {
            b.add_site(*places.choose(r).unwrap());
            eta.push(r.gen_range(0..sites));
        }
    }
    (b.build_unchecked(), eta)
}

/// A rule whose redex is cut from `agent`; `None` if the draw is unusable.
pub fn rule_for(r: &mut impl Rng, agent: &Bigraph, max_redex: usize) -> Option<ReactionRule> {
    let redex = redex_from(r, agent, max_redex)?;
    let (reactum, eta) = reactum_for(r, &redex);
    ReactionRule::new("gen", redex, reactum, eta).ok()
}

// ---------------------------------------------------------------------------
// DSL source generation

struct Ctl {
    name: &'static str,
    arity: usize,
    atomic: bool,
}

struct Src<'a> {
    ctls: &'a [Ctl],
    fresh: usize,
    /// When set, sites reuse these names instead of minting new ones.
    reuse: Option<Vec<String>>,
}

fn label(r: &mut impl Rng) -> String {
    let pool = ["lobby", "room a", "say \\\"hi\\\"", "back\\\\slash", "x"];
    format!(":\"{}\"", pool.choose(r).unwrap())
}

impl Src<'_> {
    /// A prime expression. `links` are names usable in ports; `sites`
    /// receives site names to use (at most one per node body).
    fn node(&mut self, r: &mut impl Rng, depth: usize, links: &mut Vec<String>, sites: &mut Vec<String>, want_site: bool) -> String {
        let c = self.ctls.choose(r).unwrap();
        let mut s = c.name.to_string();
        if c.arity > 0 {
            let ports: Vec<String> = (0..c.arity).map(|_| links.choose(r).unwrap().clone()).collect();
            s += &format!("{{{}}}", ports.join(", "));
        }
        if r.gen_bool(0.2) {
            s += &label(r);
        }
        if c.atomic {
            return s;
        }
        let mut items = Vec::new();
        if depth > 0 {
            for _ in 0..r.gen_range(0..=2) {
                items.push(self.item(r, depth - 1, links, sites, want_site));
            }
        }
        if want_site && r.gen_bool(0.4) {
            let name = match &self.reuse {
                Some(pool) => pool.choose(r).unwrap().clone(),
                None => format!("s{}", sites.len()),
            };
            sites.push(name.clone());
            items.push(name);
        }
        if items.is_empty() && r.gen_bool(0.5) {
            return s;
        }
        let bar = if r.gen_bool(0.5) { " | " } else { " || " };
        format!("{s}.({})", items.join(bar))
    }

    fn item(&mut self, r: &mut impl Rng, depth: usize, links: &mut Vec<String>, sites: &mut Vec<String>, want_site: bool) -> String {
        if r.gen_bool(0.15) {
            self.fresh += 1;
            let x = format!("c{}", self.fresh);
            links.push(x.clone());
            let body = self.node(r, depth, links, sites, want_site);
            links.pop();
            return format!("/{x} {body}");
        }
        self.node(r, depth, links, sites, want_site)
    }

    fn regions(&mut self, r: &mut impl Rng, n: usize, links: &mut Vec<String>, sites: &mut Vec<String>, want_site: bool) -> String {
        (0..n)
            .map(|_| {
                if r.gen_bool(0.2) {
                    let a = self.item(r, 2, links, sites, want_site);
                    let b = self.item(r, 2, links, sites, want_site);
                    format!("({a} | {b})")
                } else {
                    self.item(r, 2, links, sites, want_site)
                }
            })
            .collect::<Vec<_>>()
            .join(" || ")
    }
}

/// Source text of a random program: controls, a few bigraphs, rules with
/// optional escalation clauses, and sometimes a brs block. Not every draw
/// elaborates (e.g. a redex that is not solid); callers skip those.
pub fn program_source(r: &mut impl Rng) -> String {
    let mut ctls = vec![Ctl { name: "Room", arity: 0, atomic: false }];
    let extra = [("Door", 1, true), ("Hub", 2, false), ("Lamp", 0, true), ("Desk", 1, false), ("Tag", 0, false)];
    for (name, arity, atomic) in extra {
        if r.gen_bool(0.6) {
            ctls.push(Ctl { name, arity, atomic });
        }
    }
    let mut out = String::new();
    let mut order: Vec<usize> = (0..ctls.len()).collect();
    order.shuffle(r);
    for i in order {
        let c = &ctls[i];
        out += &format!("{}ctrl {} = {};\n", if c.atomic { "atomic " } else { "" }, c.name, c.arity);
    }
    let free_pool = ["a", "b", "net", "react", "begin"];
    let mut src = Src { ctls: &ctls, fresh: 0, reuse: None };

    let mut bigs = Vec::new();
    for i in 0..r.gen_range(0..=2) {
        let mut links: Vec<String> = free_pool.choose_multiple(r, 2).map(|s| s.to_string()).collect();
        let mut sites = Vec::new();
        let roots = r.gen_range(1..=2);
        let body = src.regions(r, roots, &mut links, &mut sites, i == 1);
        out += &format!("big b{i} = {body};\n");
        if sites.is_empty() {
            bigs.push(format!("b{i}"));
        }
    }

    let mut rules = Vec::new();
    for i in 0..r.gen_range(0..=3) {
        let mut links: Vec<String> = free_pool.choose_multiple(r, 2).map(|s| s.to_string()).collect();
        let mut sites = Vec::new();
        let roots = r.gen_range(1..=2);
        let redex = src.regions(r, roots, &mut links, &mut sites, true);
        // reactum: any redex free name, fresh closures, redex sites in any multiplicity
        let mut rlinks = links.clone();
        src.reuse = Some(sites.clone());
        let reactum = src.regions(r, roots, &mut rlinks, &mut Vec::new(), !sites.is_empty());
        src.reuse = None;
        let clause = if r.gen_bool(0.3) {
            let c = ctls.choose(r).unwrap().name;
            let fields = [format!("who=labels({c})"), format!("n=count({c})"), "why=rule".to_string()];
            let k = r.gen_range(1..=3);
            format!(" @escalate(sch-{i}; {})", fields[..k].join(", "))
        } else {
            String::new()
        };
        out += &format!("react r{i} =\n    {redex}\n    --> {reactum}{clause};\n");
        rules.push(format!("r{i}"));
    }

    if !rules.is_empty() && r.gen_bool(0.6) {
        let init = match bigs.choose(r) {
            Some(b) if r.gen_bool(0.7) => b.clone(),
            _ => {
                let mut links = vec!["a".to_string()];
                src.regions(r, 1, &mut links, &mut Vec::new(), false)
            }
        };
        let mut shuffled = rules.clone();
        shuffled.shuffle(r);
        let classes = if r.gen_bool(0.2) {
            String::new()
        } else {
            let cut = r.gen_range(1..=shuffled.len());
            let (x, y) = shuffled.split_at(cut);
            let mut cls = vec![format!("{{{}}}", x.join(", "))];
            if !y.is_empty() {
                cls.push(format!("{{{}}}", y.join(", ")));
            }
            cls.join(", ")
        };
        out += &format!("begin brs\n    init {init};\n    rules = [{classes}];\nend\n");
    }
    out
}
