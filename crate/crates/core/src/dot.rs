//! Graphviz rendering: containment as nested clusters, links as dashed
//! fan-outs from a point.

use std::fmt::Write as _;

use crate::bigraph::{Bigraph, Child, LinkTarget, NodeId, Place};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn link_id(l: &LinkTarget) -> String {
    match l {
        LinkTarget::Edge(e) => quote(&format!("e{}", e.0)),
        LinkTarget::Outer(x) => quote(&format!("name:{x}")),
    }
}

fn node_label(b: &Bigraph, n: NodeId) -> String {
    let node = b.node(n).expect("node exists");
    match &node.label {
        Some(l) => format!("{}\\n{}", node.control, l.replace('\\', "\\\\").replace('"', "\\\"")),
        None => node.control.clone(),
    }
}

fn place(out: &mut String, b: &Bigraph, at: Place, depth: usize) {
    let pad = "  ".repeat(depth);
    for child in b.children_of(at) {
        match child {
            Child::Site(s) => {
                writeln!(out, "{pad}\"site{s}\" [shape=box, style=dashed, label=\"{s}\"];").unwrap();
            }
            Child::Node(n) => {
                let label = node_label(b, *n);
                if b.children_of(Place::Node(*n)).is_empty() {
                    writeln!(out, "{pad}\"n{}\" [shape=box, label=\"{label}\"];", n.0).unwrap();
                } else {
                    writeln!(out, "{pad}subgraph \"cluster_n{}\" {{", n.0).unwrap();
                    writeln!(out, "{pad}  label=\"{label}\";").unwrap();
                    writeln!(out, "{pad}  \"n{}\" [shape=plaintext, label=\"{label}\"];", n.0).unwrap();
                    place(out, b, Place::Node(*n), depth + 1);
                    writeln!(out, "{pad}}}").unwrap();
                }
            }
        }
    }
}

/// DOT text for `b`. A bigraph with no nodes, sites or links renders as
/// an empty digraph.
pub fn to_dot(b: &Bigraph) -> String {
    let mut out = String::from("digraph bigraph {\n");
    let iface = b.interface();
    let points = b.link_points();
    let blank = b.node_count() == 0 && iface.sites == 0 && points.values().all(Vec::is_empty) && iface.outer_names.is_empty();
    if blank {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  compound=true;\n");
    for r in 0..iface.roots {
        writeln!(out, "  subgraph \"cluster_root{r}\" {{").unwrap();
        writeln!(out, "    label=\"{r}\";").unwrap();
        writeln!(out, "    style=dashed;").unwrap();
        place(&mut out, b, Place::Root(r), 2);
        out.push_str("  }\n");
    }
    for (link, pts) in &points {
        let id = link_id(link);
        match link {
            LinkTarget::Edge(_) => writeln!(out, "  {id} [shape=point];").unwrap(),
            LinkTarget::Outer(x) => writeln!(out, "  {id} [shape=plaintext, label={}];", quote(x)).unwrap(),
        }
        for (n, p) in pts {
            writeln!(out, "  \"n{}\" -> {id} [style=dashed, arrowhead=none, taillabel=\"{p}\"];", n.0).unwrap();
        }
    }
    for (x, target) in b.inner_links() {
        let inner = quote(&format!("inner:{x}"));
        writeln!(out, "  {inner} [shape=plaintext, label={}];", quote(x)).unwrap();
        writeln!(out, "  {inner} -> {} [style=dashed, arrowhead=none];", link_id(target)).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::Signature;
    use crate::spatial::{ingest_scan, ScanDocument};

    #[test]
    fn empty_is_header_only() {
        assert_eq!(to_dot(&Bigraph::empty(Signature::new(), 0)), "digraph bigraph {\n}\n");
        assert_eq!(to_dot(&Bigraph::empty(Signature::new(), 2)), "digraph bigraph {\n}\n");
    }

    #[test]
    fn office_clusters_and_links() {
        let doc = ScanDocument::from_json(include_str!("../tests/fixtures/office_scan.json")).unwrap();
        let b = ingest_scan(&doc, &doc.signature().unwrap()).unwrap();
        let dot = to_dot(&b);
        // building, floor, two rooms and the desk zone hold something
        assert_eq!(dot.matches("subgraph \"cluster_n").count(), 5);
        // hub, two projectors, light, sensor and lamp are leaves
        assert_eq!(dot.matches("[shape=box,").count(), 6);
        assert_eq!(dot.matches("[shape=point]").count(), 2);
        // lan-0: hub plus two projectors; zig-a: light plus lamp
        assert_eq!(dot.matches("style=dashed, arrowhead=none").count(), 5);
        assert!(dot.contains("Projector\\nprojector"));
        assert!(dot.ends_with("}\n"));
        assert_eq!(dot, to_dot(&b));
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
    }

    #[test]
    fn escapes_quotes() {
        let sig = Signature::from_controls([crate::bigraph::Control::new("A", 0, true)]).unwrap();
        let mut e = crate::bigraph::BigraphBuilder::new(sig);
        let r = e.add_root();
        e.add_node(Place::Root(r), "A", Some("say \"hi\""), vec![]).unwrap();
        let dot = to_dot(&e.build().unwrap());
        assert!(dot.contains("A\\nsay \\\"hi\\\""));
    }
}
