use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryExpr {
    Anchor(Vec<EntityId>),
    Project(RelationId, Box<QueryExpr>),
    InverseProject(RelationId, Box<QueryExpr>),
    And(Box<QueryExpr>, Box<QueryExpr>),
    Or(Box<QueryExpr>, Box<QueryExpr>),
    Not(Box<QueryExpr>),
}

impl QueryExpr {
    pub fn anchor(e: u32) -> Self {
        QueryExpr::Anchor(vec![EntityId(e)])
    }

    pub fn project(r: u32, arg: QueryExpr) -> Self {
        QueryExpr::Project(RelationId(r), Box::new(arg))
    }

    pub fn inverse_project(r: u32, arg: QueryExpr) -> Self {
        QueryExpr::InverseProject(RelationId(r), Box::new(arg))
    }

    pub fn and(a: QueryExpr, b: QueryExpr) -> Self {
        QueryExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: QueryExpr, b: QueryExpr) -> Self {
        QueryExpr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: QueryExpr) -> Self {
        QueryExpr::Not(Box::new(a))
    }

    pub fn children(&self) -> Vec<&QueryExpr> {
        match self {
            QueryExpr::Anchor(_) => vec![],
            QueryExpr::Project(_, a) | QueryExpr::InverseProject(_, a) | QueryExpr::Not(a) => {
                vec![a]
            }
            QueryExpr::And(a, b) | QueryExpr::Or(a, b) => vec![a, b],
        }
    }

    pub fn has_negation(&self) -> bool {
        matches!(self, QueryExpr::Not(_)) || self.children().iter().any(|c| c.has_negation())
    }

    /// Negation is admitted only as one operand of a conjunction whose other
    /// operand is positive, and never directly on an anchor. This keeps every
    /// answer set bounded by a positive branch.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner(false)
    }

    fn validate_inner(&self, under_and: bool) -> Result<()> {
        match self {
            QueryExpr::Anchor(es) if es.is_empty() => {
                Err(Error::InvalidQuery("empty anchor set".into()))
            }
            QueryExpr::Anchor(_) => Ok(()),
            QueryExpr::Not(a) => {
                if !under_and {
                    return Err(Error::InvalidQuery(
                        "negation must be an operand of a conjunction".into(),
                    ));
                }
                if matches!(**a, QueryExpr::Anchor(_)) {
                    return Err(Error::InvalidQuery("negation of a bare anchor".into()));
                }
                a.validate_inner(false)
            }
            QueryExpr::And(a, b) => {
                if matches!(**a, QueryExpr::Not(_)) && matches!(**b, QueryExpr::Not(_)) {
                    return Err(Error::InvalidQuery(
                        "conjunction of two negations has no positive branch".into(),
                    ));
                }
                a.validate_inner(true)?;
                b.validate_inner(true)
            }
            QueryExpr::Or(a, b) => {
                a.validate_inner(false)?;
                b.validate_inner(false)
            }
            QueryExpr::Project(_, a) | QueryExpr::InverseProject(_, a) => a.validate_inner(false),
        }
    }

    /// Checks every id against the graph's vocabularies.
    pub fn check_ids(&self, g: &KnowledgeGraph) -> Result<()> {
        match self {
            QueryExpr::Anchor(es) => es.iter().try_for_each(|&e| g.check_entity(e)),
            QueryExpr::Project(r, a) | QueryExpr::InverseProject(r, a) => {
                g.check_relation(*r)?;
                a.check_ids(g)
            }
            _ => self.children().into_iter().try_for_each(|c| c.check_ids(g)),
        }
    }

    /// Renders in the s-expression grammar accepted by [`super::parse`].
    pub fn to_sexpr(&self, g: &KnowledgeGraph) -> String {
        let mut out = String::new();
        self.write_sexpr(g, &mut out);
        out
    }

    fn write_sexpr(&self, g: &KnowledgeGraph, out: &mut String) {
        match self {
            QueryExpr::Anchor(es) => {
                out.push('{');
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(&quote(g.entities().name(e.0)));
                }
                out.push('}');
            }
            QueryExpr::Project(r, a) | QueryExpr::InverseProject(r, a) => {
                let op = if matches!(self, QueryExpr::Project(..)) { "p" } else { "ip" };
                let _ = write!(out, "({op} {} ", quote(g.relations().name(r.0)));
                a.write_sexpr(g, out);
                out.push(')');
            }
            QueryExpr::And(a, b) | QueryExpr::Or(a, b) => {
                out.push_str(if matches!(self, QueryExpr::And(..)) { "(and " } else { "(or " });
                a.write_sexpr(g, out);
                out.push(' ');
                b.write_sexpr(g, out);
                out.push(')');
            }
            QueryExpr::Not(a) => {
                out.push_str("(not ");
                a.write_sexpr(g, out);
                out.push(')');
            }
        }
    }
}

pub(crate) fn is_bare(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '{' | '}' | '"' | '\\'))
}

fn quote(name: &str) -> String {
    if is_bare(name) {
        return name.to_string();
    }
    let mut s = String::with_capacity(name.len() + 2);
    s.push('"');
    for c in name.chars() {
        if matches!(c, '"' | '\\') {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}
