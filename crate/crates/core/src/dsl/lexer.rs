use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    CtrlIdent,
    Symbol,
    Keyword,
    Integer,
    Str,
}

pub const KEYWORDS: &[&str] = &["atomic", "begin", "big", "brs", "ctrl", "end", "init", "react", "rules"];

/// `--> || |` must precede their prefixes.
const SYMBOLS: &[&str] = &["-->", "||", "|", "=", ";", ".", "(", ")", "{", "}", "[", "]", ",", "/", "@", ":"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// For strings, the unescaped contents.
    pub lexeme: String,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Str => write!(f, "{:?}", self.lexeme),
            _ => write!(f, "`{}`", self.lexeme),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: unexpected `{fragment}`")]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub fragment: String,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let dash_join = d == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphanumeric());
                if ident_char(d) || dash_join {
                    i += 1;
                } else {
                    break;
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            col += i - start;
            let kind = if KEYWORDS.contains(&lexeme.as_str()) {
                TokenKind::Keyword
            } else if c.is_ascii_uppercase() {
                TokenKind::CtrlIdent
            } else {
                TokenKind::Ident
            };
            out.push(Token { kind, lexeme, line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            out.push(Token { kind: TokenKind::Integer, lexeme: chars[start..i].iter().collect(), line: tl, col: tc });
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        let fragment: String = chars[i..j].iter().collect();
                        return Err(LexError { line: tl, col: tc, fragment });
                    }
                    Some('"') => break,
                    Some('\\') => match chars.get(j + 1) {
                        Some(e @ ('"' | '\\')) => {
                            s.push(*e);
                            j += 2;
                        }
                        _ => return Err(LexError { line: tl, col: tc + j - i, fragment: "\\".into() }),
                    },
                    Some(ch) => {
                        s.push(*ch);
                        j += 1;
                    }
                }
            }
            col += j + 1 - i;
            i = j + 1;
            out.push(Token { kind: TokenKind::Str, lexeme: s, line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Token { kind: TokenKind::Symbol, lexeme: sym.to_string(), line: tl, col: tc });
            }
            None => return Err(LexError { line: tl, col: tc, fragment: c.to_string() }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn react_header() {
        use TokenKind::*;
        assert_eq!(
            kinds("react shutdown_nodes ="),
            vec![(Keyword, "react".into()), (Ident, "shutdown_nodes".into()), (Symbol, "=".into())]
        );
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn ports() {
        use TokenKind::*;
        assert_eq!(
            kinds("Node{x}"),
            vec![(CtrlIdent, "Node".into()), (Symbol, "{".into()), (Ident, "x".into()), (Symbol, "}".into())]
        );
    }

    #[test]
    fn arrows_bars_and_dashed_idents() {
        let toks = kinds("a-->b || c | presence-v1");
        let lex: Vec<&str> = toks.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(lex, vec!["a", "-->", "b", "||", "c", "|", "presence-v1"]);
        assert_eq!(tokenize("x-").unwrap_err().fragment, "-");
    }

    #[test]
    fn positions_and_errors() {
        let toks = tokenize("ctrl A = 0;\n  big b").unwrap();
        assert_eq!((toks[5].line, toks[5].col), (2, 3));
        assert_eq!(tokenize("A $"), Err(LexError { line: 1, col: 3, fragment: "$".into() }));
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn strings() {
        let toks = tokenize(r#"A:"room \"a\"" B"#).unwrap();
        assert_eq!(toks[2].kind, TokenKind::Str);
        assert_eq!(toks[2].lexeme, "room \"a\"");
        assert_eq!(toks[3].col, 16);
    }
}
