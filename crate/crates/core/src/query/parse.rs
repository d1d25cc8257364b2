//! S-expression query grammar:
//!
//! ```text
//! expr := "{" name+ "}"            anchor set
//!       | "(" "p"   name expr ")"  projection through a relation
//!       | "(" "ip"  name expr ")"  projection against a relation
//!       | "(" "and" expr expr ")"
//!       | "(" "or"  expr expr ")"
//!       | "(" "not" expr ")"
//! name := bare token | "quoted \"string\""
//! ```

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;

use super::expr::QueryExpr;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    OpenSet,
    CloseSet,
    Name(String),
}

fn syntax(position: usize, reason: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        reason: reason.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '{' | '}' => {
                chars.next();
                out.push((
                    pos,
                    match c {
                        '(' => Tok::Open,
                        ')' => Tok::Close,
                        '{' => Tok::OpenSet,
                        _ => Tok::CloseSet,
                    },
                ));
            }
            '"' => {
                chars.next();
                let mut name = String::new();
                loop {
                    match chars.next() {
                        None => return Err(syntax(pos, "unterminated quoted name")),
                        Some((_, '"')) => break,
                        Some((p, '\\')) => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => name.push(e),
                            _ => return Err(syntax(p, "invalid escape in quoted name")),
                        },
                        Some((_, c)) => name.push(c),
                    }
                }
                out.push((pos, Tok::Name(name)));
            }
            _ => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '{' | '}' | '"') {
                        break;
                    }
                    name.push(c);
                    chars.next();
                }
                out.push((pos, Tok::Name(name)));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    g: &'a KnowledgeGraph,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Result<(usize, Tok)> {
        let tok = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or_else(|| syntax(self.end, "unexpected end of input"))?;
        self.at += 1;
        Ok(tok)
    }

    fn name(&mut self, what: &str) -> Result<String> {
        match self.next()? {
            (_, Tok::Name(n)) => Ok(n),
            (p, _) => Err(syntax(p, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<QueryExpr> {
        match self.next()? {
            (p, Tok::OpenSet) => {
                let mut entities = Vec::new();
                loop {
                    match self.next()? {
                        (_, Tok::CloseSet) => break,
                        (_, Tok::Name(n)) => entities.push(self.g.entity_id(&n)?),
                        (q, _) => return Err(syntax(q, "expected entity name or `}`")),
                    }
                }
                if entities.is_empty() {
                    return Err(syntax(p, "empty anchor set"));
                }
                Ok(QueryExpr::Anchor(entities))
            }
            (p, Tok::Open) => {
                let op = self.name("operator")?;
                let expr = match op.as_str() {
                    "p" | "ip" => {
                        let rel = self.g.relation_id(&self.name("relation name")?)?;
                        let arg = Box::new(self.expr()?);
                        if op == "p" {
                            QueryExpr::Project(rel, arg)
                        } else {
                            QueryExpr::InverseProject(rel, arg)
                        }
                    }
                    "and" | "or" | "not" => {
                        let want = if op == "not" { 1 } else { 2 };
                        let mut args = Vec::new();
                        while !matches!(self.peek(), Some(Tok::Close) | None) {
                            args.push(self.expr()?);
                        }
                        if args.len() != want {
                            return Err(syntax(
                                p,
                                format!("`{op}` takes {want} operand(s), got {}", args.len()),
                            ));
                        }
                        let mut args = args.into_iter();
                        let a = Box::new(args.next().expect("arity checked"));
                        match op.as_str() {
                            "not" => QueryExpr::Not(a),
                            "and" => QueryExpr::And(a, Box::new(args.next().expect("arity"))),
                            _ => QueryExpr::Or(a, Box::new(args.next().expect("arity"))),
                        }
                    }
                    other => return Err(syntax(p + 1, format!("unknown operator `{other}`"))),
                };
                match self.next()? {
                    (_, Tok::Close) => Ok(expr),
                    (q, _) => Err(syntax(q, "expected `)`")),
                }
            }
            (p, _) => Err(syntax(p, "expected `(` or `{`")),
        }
    }
}

/// Parses one query, resolving names against `g`, and validates negation
/// placement.
pub fn parse(text: &str, g: &KnowledgeGraph) -> Result<QueryExpr> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        at: 0,
        end: text.len(),
        g,
    };
    let expr = parser.expr()?;
    if parser.at != parser.toks.len() {
        return Err(syntax(parser.pos(), "trailing input after query"));
    }
    expr.validate()?;
    Ok(expr)
}

/// One query per non-blank line; lines starting with `#` are skipped.
pub fn parse_lines(text: &str, g: &KnowledgeGraph) -> Result<Vec<QueryExpr>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            parse(l, g).map_err(|e| Error::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
