use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Decl, Expr, Init, Pos, ProgramAst};
use super::{BrsBlock, BrsInit, DslError, NamedBigraph, Program};
use crate::bigraph::{permute_sites, Bigraph, BigraphBuilder, Control, EdgeId, LinkTarget, Place, Signature};
use crate::rewrite::{ReactionRule, Selector};

struct Lower<'a> {
    sig: &'a Signature,
    b: BigraphBuilder,
    scopes: Vec<(String, EdgeId)>,
    /// (name, builder site index) in order of appearance
    sites: Vec<(String, usize)>,
}

impl<'a> Lower<'a> {
    fn new(sig: &'a Signature) -> Self {
        Lower { sig, b: BigraphBuilder::new(sig.clone()), scopes: Vec::new(), sites: Vec::new() }
    }

    fn scoped<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let e = self.b.add_edge();
        self.scopes.push((name.to_string(), e));
        let out = f(self);
        self.scopes.pop();
        out
    }

    fn link(&self, name: &str) -> LinkTarget {
        match self.scopes.iter().rev().find(|(n, _)| n == name) {
            Some((_, e)) => LinkTarget::Edge(*e),
            None => LinkTarget::Outer(name.to_string()),
        }
    }

    /// Top level: every operand of `|`/`||` is its own region.
    fn regions(&mut self, e: &Expr) -> Result<(), DslError> {
        match e {
            Expr::Par { left, right, .. } => {
                self.regions(left)?;
                self.regions(right)
            }
            Expr::Close { name, body, .. } => self.scoped(name, |l| l.regions(body)),
            Expr::Empty => {
                self.b.add_root();
                Ok(())
            }
            Expr::Group(inner) => {
                let r = self.b.add_root();
                self.nested(inner, Place::Root(r))
            }
            Expr::Node { .. } | Expr::Site { .. } => {
                let r = self.b.add_root();
                self.nested(e, Place::Root(r))
            }
        }
    }

    fn nested(&mut self, e: &Expr, parent: Place) -> Result<(), DslError> {
        match e {
            Expr::Par { left, right, .. } => {
                self.nested(left, parent)?;
                self.nested(right, parent)
            }
            Expr::Close { name, body, .. } => self.scoped(name, |l| l.nested(body, parent)),
            Expr::Group(inner) => self.nested(inner, parent),
            Expr::Empty => Ok(()),
            Expr::Site { name, .. } => {
                let s = self.b.add_site(parent);
                self.sites.push((name.clone(), s));
                Ok(())
            }
            Expr::Node { ctrl, ports, label, body, pos } => {
                let control = control(self.sig, ctrl, *pos)?.clone();
                if ports.len() != control.arity {
                    return Err(DslError::ArityMismatch {
                        control: ctrl.clone(),
                        arity: control.arity,
                        ports: ports.len(),
                        position: *pos,
                    });
                }
                if control.atomic && body.as_deref().is_some_and(|b| *b != Expr::Empty) {
                    return Err(DslError::AtomicNest { control: ctrl.clone(), position: *pos });
                }
                let targets = ports.iter().map(|p| self.link(p)).collect();
                let id = self.b.add_node(parent, ctrl, label.as_deref(), targets)?;
                match body {
                    Some(body) => self.nested(body, Place::Node(id)),
                    None => Ok(()),
                }
            }
        }
    }
}

fn control<'s>(sig: &'s Signature, name: &str, position: Pos) -> Result<&'s Control, DslError> {
    sig.get(name).ok_or_else(|| DslError::UnknownControl { name: name.to_string(), position })
}

/// A lowered expression plus the names of its sites in appearance order.
struct Lowered {
    bigraph: Bigraph,
    sites: Vec<String>,
}

fn lower(sig: &Signature, e: &Expr) -> Result<Lowered, DslError> {
    let mut l = Lower::new(sig);
    l.regions(e)?;
    let sites = l.sites.iter().map(|(n, _)| n.clone()).collect();
    Ok(Lowered { bigraph: l.b.build()?, sites })
}

/// Sites ordered by name, ties in appearance order; returns the bigraph
/// renumbered that way and its name table.
fn sort_sites(low: Lowered) -> Result<(Bigraph, Vec<String>), DslError> {
    let mut order: Vec<usize> = (0..low.sites.len()).collect();
    order.sort_by(|a, b| low.sites[*a].cmp(&low.sites[*b]).then(a.cmp(b)));
    let names = order.iter().map(|i| low.sites[*i].clone()).collect();
    Ok((permute_sites(&low.bigraph, &order)?, names))
}

fn unique_sites(names: &[String]) -> Result<(), DslError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(DslError::DuplicateName { name: n.clone() });
        }
    }
    Ok(())
}

/// Lower a standalone expression: a bigraph with uniquely named sites.
pub fn elaborate_expr(sig: &Signature, e: &Expr) -> Result<NamedBigraph, DslError> {
    let (bigraph, site_names) = sort_sites(lower(sig, e)?)?;
    unique_sites(&site_names)?;
    Ok(NamedBigraph { name: String::new(), bigraph, site_names })
}

pub fn elaborate(ast: &ProgramAst) -> Result<Program, DslError> {
    let mut sig = Signature::new();
    for d in &ast.decls {
        if let Decl::Ctrl { name, arity, atomic, .. } = d {
            if sig.contains(name) {
                return Err(DslError::DuplicateName { name: name.clone() });
            }
            sig.insert(Control::new(name.clone(), *arity, *atomic))?;
        }
    }

    let mut program = Program { signature: sig.clone(), ..Program::default() };
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut claim = |name: &str| {
        if taken.insert(name.to_string()) {
            Ok(())
        } else {
            Err(DslError::DuplicateName { name: name.to_string() })
        }
    };
    let mut brs_decl = None;
    for d in &ast.decls {
        match d {
            Decl::Ctrl { .. } => {}
            Decl::Big { name, expr, .. } => {
                claim(name)?;
                let mut nb = elaborate_expr(&sig, expr)?;
                nb.name = name.clone();
                program.bigraphs.push(nb);
            }
            Decl::React { name, redex, reactum, escalation, pos } => {
                claim(name)?;
                let (lhs, lhs_sites) = sort_sites(lower(&sig, redex)?)?;
                unique_sites(&lhs_sites)?;
                let (rhs, rhs_sites) = sort_sites(lower(&sig, reactum)?)?;
                let index: BTreeMap<&String, usize> = lhs_sites.iter().enumerate().map(|(i, n)| (n, i)).collect();
                let eta = rhs_sites
                    .iter()
                    .map(|n| {
                        index
                            .get(n)
                            .copied()
                            .ok_or_else(|| DslError::UnboundSite { rule: name.clone(), site: n.clone() })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut rule = ReactionRule::new(name.clone(), lhs, rhs, eta)
                    .map_err(|source| DslError::Rule { rule: name.clone(), source })?
                    .with_site_names(lhs_sites);
                if let Some(esc) = escalation {
                    for (_, sel) in &esc.fields {
                        if let Selector::Labels(c) | Selector::Count(c) = sel {
                            control(&sig, c, *pos)?;
                        }
                    }
                    rule = rule.with_escalation(esc.clone());
                }
                program.rules.push(rule);
            }
            Decl::Brs { .. } => {
                if brs_decl.is_some() {
                    return Err(DslError::DuplicateName { name: "brs".into() });
                }
                brs_decl = Some(d);
            }
        }
    }

    if let Some(Decl::Brs { init, classes, pos }) = brs_decl {
        let init = match init {
            None => return Err(DslError::MissingInit { position: *pos }),
            Some(Init::Name(n, p)) => {
                if program.bigraph(n).is_none() {
                    return Err(DslError::UnknownBigraph { name: n.clone(), position: *p });
                }
                BrsInit::Named(n.clone())
            }
            Some(Init::Expr(e)) => BrsInit::Inline(Box::new(elaborate_expr(&sig, e)?)),
        };
        let mut out = Vec::new();
        for class in classes {
            let mut names = Vec::new();
            for (n, p) in class {
                if program.rule(n).is_none() {
                    return Err(DslError::UnknownRule { name: n.clone(), position: *p });
                }
                names.push(n.clone());
            }
            out.push(names);
        }
        program.brs = Some(BrsBlock { init, classes: out });
    }
    Ok(program)
}
