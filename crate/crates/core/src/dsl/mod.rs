//! Textual policy language: control declarations, bigraph definitions,
//! reaction rules with optional escalation annotations, and a `brs` block.

mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::{Decl, Expr, Init, ParOp, Pos, ProgramAst};
pub use elaborate::{elaborate, elaborate_expr};
pub use lexer::{tokenize, LexError, Token, TokenKind, KEYWORDS};
pub use parser::{parse, parse_expr, ParseError};
pub use printer::{pretty_print, print_bigraph};

use crate::bigraph::{iso_eq, iso_eq_up_to_sites, permute_sites, Bigraph, BigraphError, Signature};
use crate::rewrite::{BrsSpec, ReactionRule, RuleError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{}:{}: unknown control `{name}`", position.line, position.col)]
    UnknownControl { name: String, position: Pos },
    #[error("{}:{}: control `{control}` has arity {arity} but {ports} ports were given", position.line, position.col)]
    ArityMismatch { control: String, arity: usize, ports: usize, position: Pos },
    #[error("{}:{}: atomic control `{control}` cannot contain anything", position.line, position.col)]
    AtomicNest { control: String, position: Pos },
    #[error("rule `{rule}`: reactum site `{site}` does not occur in the redex")]
    UnboundSite { rule: String, site: String },
    #[error("`{name}` is defined more than once")]
    DuplicateName { name: String },
    #[error("{}:{}: unknown rule `{name}`", position.line, position.col)]
    UnknownRule { name: String, position: Pos },
    #[error("{}:{}: unknown bigraph `{name}`", position.line, position.col)]
    UnknownBigraph { name: String, position: Pos },
    #[error("{}:{}: brs block has no init", position.line, position.col)]
    MissingInit { position: Pos },
    #[error("rule `{rule}`: {source}")]
    Rule { rule: String, source: RuleError },
    #[error(transparent)]
    Bigraph(#[from] BigraphError),
}

/// A bigraph with a display name for each site, by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedBigraph {
    pub name: String,
    pub bigraph: Bigraph,
    pub site_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BrsInit {
    Named(String),
    Inline(Box<NamedBigraph>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrsBlock {
    pub init: BrsInit,
    /// Priority classes of rule names, highest first.
    pub classes: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub signature: Signature,
    pub bigraphs: Vec<NamedBigraph>,
    pub rules: Vec<ReactionRule>,
    pub brs: Option<BrsBlock>,
}

impl Program {
    pub fn bigraph(&self, name: &str) -> Option<&NamedBigraph> {
        self.bigraphs.iter().find(|b| b.name == name)
    }

    pub fn rule(&self, name: &str) -> Option<&ReactionRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn init_state(&self) -> Option<&Bigraph> {
        match &self.brs.as_ref()?.init {
            BrsInit::Named(n) => self.bigraph(n).map(|b| &b.bigraph),
            BrsInit::Inline(b) => Some(&b.bigraph),
        }
    }

    /// The executable system. Without a `brs` block, `None`. An empty
    /// `rules` list puts every rule in one class.
    pub fn brs_spec(&self) -> Option<BrsSpec> {
        let block = self.brs.as_ref()?;
        let init = self.init_state()?.clone();
        let index = |n: &String| self.rules.iter().position(|r| &r.name == n);
        let classes = if block.classes.is_empty() {
            vec![(0..self.rules.len()).collect()]
        } else {
            block.classes.iter().map(|c| c.iter().filter_map(index).collect()).collect()
        };
        Some(BrsSpec { init, rules: self.rules.clone(), classes })
    }
}

/// Tokenize, parse and elaborate.
pub fn compile(src: &str) -> Result<Program, DslError> {
    let tokens = tokenize(src)?;
    let ast = parse(&tokens)?;
    elaborate(&ast)
}

/// Parse and lower a lone expression against `sig`.
pub fn compile_expr(sig: &Signature, src: &str) -> Result<NamedBigraph, DslError> {
    let tokens = tokenize(src)?;
    elaborate_expr(sig, &parse_expr(&tokens)?)
}

/// Reactum with its sites reordered by instantiation target (stable), and
/// the matching instantiation map.
fn reactum_by_eta(r: &ReactionRule) -> Option<(Bigraph, Vec<usize>)> {
    let mut order: Vec<usize> = (0..r.eta.len()).collect();
    order.sort_by_key(|i| r.eta[*i]);
    let eta = order.iter().map(|i| r.eta[*i]).collect();
    Some((permute_sites(&r.reactum, &order).ok()?, eta))
}

/// Rules are equivalent when their redexes are isomorphic, their
/// instantiation maps agree, and their reacta are isomorphic up to
/// reordering reactum sites that instantiate the same redex site.
pub fn rules_equivalent(a: &ReactionRule, b: &ReactionRule) -> bool {
    if a.name != b.name
        || a.escalation != b.escalation
        || a.site_names != b.site_names
        || !iso_eq(&a.redex, &b.redex)
    {
        return false;
    }
    let (Some((ra, ea)), Some((rb, eb))) = (reactum_by_eta(a), reactum_by_eta(b)) else {
        return false;
    };
    ea == eb && iso_eq_up_to_sites(&ra, &rb, &ea)
}

fn named_equivalent(a: &NamedBigraph, b: &NamedBigraph) -> bool {
    a.name == b.name && a.site_names == b.site_names && iso_eq(&a.bigraph, &b.bigraph)
}

/// Component-wise equivalence of two programs, as used by round-trip checks.
pub fn programs_equivalent(a: &Program, b: &Program) -> bool {
    let brs_eq = match (&a.brs, &b.brs) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            x.classes == y.classes
                && match (&x.init, &y.init) {
                    (BrsInit::Named(m), BrsInit::Named(n)) => m == n,
                    (BrsInit::Inline(m), BrsInit::Inline(n)) => named_equivalent(m, n),
                    _ => false,
                }
        }
        _ => false,
    };
    a.signature == b.signature
        && a.bigraphs.len() == b.bigraphs.len()
        && a.bigraphs.iter().zip(&b.bigraphs).all(|(x, y)| named_equivalent(x, y))
        && a.rules.len() == b.rules.len()
        && a.rules.iter().zip(&b.rules).all(|(x, y)| rules_equivalent(x, y))
        && brs_eq
}
