use crate::rewrite::EscalationClause;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParOp {
    /// `|`
    Bar,
    /// `||`
    DoubleBar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Node { ctrl: String, ports: Vec<String>, label: Option<String>, body: Option<Box<Expr>>, pos: Pos },
    Par { op: ParOp, left: Box<Expr>, right: Box<Expr> },
    Close { name: String, body: Box<Expr>, pos: Pos },
    /// Parenthesised, non-empty.
    Group(Box<Expr>),
    /// `()` or `1`
    Empty,
    Site { name: String, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    Name(String, Pos),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Ctrl { name: String, arity: usize, atomic: bool, pos: Pos },
    Big { name: String, expr: Expr, pos: Pos },
    React { name: String, redex: Expr, reactum: Expr, escalation: Option<EscalationClause>, pos: Pos },
    Brs { init: Option<Init>, classes: Vec<Vec<(String, Pos)>>, pos: Pos },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramAst {
    pub decls: Vec<Decl>,
}
