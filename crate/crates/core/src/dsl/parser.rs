use thiserror::Error;

use super::ast::{Decl, Expr, Init, ParOp, Pos, ProgramAst};
use super::lexer::{Token, TokenKind};
use crate::rewrite::{EscalationClause, Selector};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{}:{}: expected {expected}, found {found}", position.line, position.col)]
pub struct ParseError {
    pub expected: String,
    pub found: String,
    pub position: Pos,
}

struct Parser<'a> {
    toks: &'a [Token],
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.i)
    }

    fn pos(&self) -> Pos {
        match self.peek() {
            Some(t) => Pos { line: t.line, col: t.col },
            None => match self.toks.last() {
                Some(t) => Pos { line: t.line, col: t.col + t.lexeme.chars().count() },
                None => Pos { line: 1, col: 1 },
            },
        }
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let found = self.peek().map_or_else(|| "end of input".to_string(), |t| t.to_string());
        Err(ParseError { expected: expected.to_string(), found, position: self.pos() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Symbol && t.lexeme == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.lexeme == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.i += 1;
        }
        hit
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.i += 1;
            Ok(())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn take(&mut self, kind: TokenKind, what: &str) -> PResult<(String, Pos)> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                let pos = self.pos();
                self.i += 1;
                Ok((t.lexeme.clone(), pos))
            }
            _ => self.error(what),
        }
    }

    /// Link names may collide with keywords; inside braces they are names.
    fn link_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Ident | TokenKind::Keyword) => {
                self.i += 1;
                Ok(t.lexeme.clone())
            }
            _ => self.error("link name"),
        }
    }

    fn program(&mut self) -> PResult<ProgramAst> {
        let mut decls = Vec::new();
        while self.peek().is_some() {
            decls.push(self.decl()?);
        }
        Ok(ProgramAst { decls })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let pos = self.pos();
        if self.is_kw("atomic") || self.is_kw("ctrl") {
            let atomic = self.is_kw("atomic");
            if atomic {
                self.i += 1;
            }
            self.kw("ctrl")?;
            let (name, _) = self.take(TokenKind::CtrlIdent, "control name")?;
            self.sym("=")?;
            let (n, npos) = self.take(TokenKind::Integer, "arity")?;
            let arity = n.parse().map_err(|_| ParseError {
                expected: "arity".into(),
                found: format!("`{n}`"),
                position: npos,
            })?;
            self.sym(";")?;
            return Ok(Decl::Ctrl { name, arity, atomic, pos });
        }
        if self.is_kw("big") {
            self.i += 1;
            let (name, _) = self.take(TokenKind::Ident, "bigraph name")?;
            self.sym("=")?;
            let expr = self.expr()?;
            self.sym(";")?;
            return Ok(Decl::Big { name, expr, pos });
        }
        if self.is_kw("react") {
            self.i += 1;
            let (name, _) = self.take(TokenKind::Ident, "rule name")?;
            self.sym("=")?;
            let redex = self.expr()?;
            self.sym("-->")?;
            let reactum = self.expr()?;
            let escalation = if self.eat_sym("@") { Some(self.annotation()?) } else { None };
            self.sym(";")?;
            return Ok(Decl::React { name, redex, reactum, escalation, pos });
        }
        if self.is_kw("begin") {
            self.i += 1;
            self.kw("brs")?;
            let mut init = None;
            let mut classes = Vec::new();
            loop {
                if self.is_kw("end") {
                    self.i += 1;
                    break;
                }
                if self.is_kw("init") {
                    self.i += 1;
                    let lone_name = matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident)
                        && matches!(self.toks.get(self.i + 1), Some(t) if t.lexeme == ";");
                    init = Some(if lone_name {
                        let (n, p) = self.take(TokenKind::Ident, "bigraph name")?;
                        Init::Name(n, p)
                    } else {
                        Init::Expr(self.expr()?)
                    });
                    self.sym(";")?;
                } else if self.is_kw("rules") {
                    self.i += 1;
                    self.sym("=")?;
                    self.sym("[")?;
                    if !self.is_sym("]") {
                        classes.push(self.class()?);
                        while self.eat_sym(",") {
                            classes.push(self.class()?);
                        }
                    }
                    self.sym("]")?;
                    self.sym(";")?;
                } else {
                    return self.error("`init`, `rules` or `end`");
                }
            }
            return Ok(Decl::Brs { init, classes, pos });
        }
        self.error("declaration")
    }

    fn class(&mut self) -> PResult<Vec<(String, Pos)>> {
        self.sym("{")?;
        let mut names = vec![self.take(TokenKind::Ident, "rule name")?];
        while self.eat_sym(",") {
            names.push(self.take(TokenKind::Ident, "rule name")?);
        }
        self.sym("}")?;
        Ok(names)
    }

    fn annotation(&mut self) -> PResult<EscalationClause> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && t.lexeme == "escalate" => self.i += 1,
            _ => return self.error("`escalate`"),
        }
        self.sym("(")?;
        let (schema_id, _) = self.take(TokenKind::Ident, "schema id")?;
        let mut fields = Vec::new();
        if self.eat_sym(";") {
            loop {
                let (field, _) = self.take(TokenKind::Ident, "field name")?;
                self.sym("=")?;
                fields.push((field, self.selector()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym(")")?;
        Ok(EscalationClause { schema_id, fields })
    }

    fn selector(&mut self) -> PResult<Selector> {
        let (word, _) = self.take(TokenKind::Ident, "selector")?;
        match word.as_str() {
            "rule" => Ok(Selector::RuleName),
            "labels" | "count" => {
                self.sym("(")?;
                let (ctrl, _) = self.take(TokenKind::CtrlIdent, "control name")?;
                self.sym(")")?;
                Ok(if word == "labels" { Selector::Labels(ctrl) } else { Selector::Count(ctrl) })
            }
            _ => {
                self.i -= 1;
                self.error("`labels`, `count` or `rule`")
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_sym("||") {
                ParOp::DoubleBar
            } else if self.eat_sym("|") {
                ParOp::Bar
            } else {
                return Ok(left);
            };
            let right = self.unary()?;
            left = Expr::Par { op, left: Box::new(left), right: Box::new(right) };
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat_sym("/") {
            let name = self.link_name()?;
            let body = self.unary()?;
            return Ok(Expr::Close { name, body: Box::new(body), pos });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let Some(t) = self.peek() else { return self.error("expression") };
        match t.kind {
            TokenKind::CtrlIdent => {
                self.i += 1;
                let mut ports = Vec::new();
                if self.eat_sym("{") {
                    if !self.is_sym("}") {
                        ports.push(self.link_name()?);
                        while self.eat_sym(",") {
                            ports.push(self.link_name()?);
                        }
                    }
                    self.sym("}")?;
                }
                let label = if self.eat_sym(":") { Some(self.take(TokenKind::Str, "label string")?.0) } else { None };
                let body = if self.eat_sym(".") { Some(Box::new(self.atom()?)) } else { None };
                Ok(Expr::Node { ctrl: t.lexeme.clone(), ports, label, body, pos })
            }
            TokenKind::Ident => {
                self.i += 1;
                Ok(Expr::Site { name: t.lexeme.clone(), pos })
            }
            TokenKind::Integer if t.lexeme == "1" => {
                self.i += 1;
                Ok(Expr::Empty)
            }
            TokenKind::Symbol if t.lexeme == "(" => {
                self.i += 1;
                if self.eat_sym(")") {
                    return Ok(Expr::Empty);
                }
                let inner = self.expr()?;
                self.sym(")")?;
                Ok(Expr::Group(Box::new(inner)))
            }
            _ => self.error("expression"),
        }
    }
}

pub fn parse(tokens: &[Token]) -> Result<ProgramAst, ParseError> {
    Parser { toks: tokens, i: 0 }.program()
}

/// Parse a single bigraph expression (used for inline states).
pub fn parse_expr(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokens, i: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.error("end of input");
    }
    Ok(e)
}
