//! The fourteen standard query structures and the BetaE tuple notation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId};

use super::expr::QueryExpr;

/// Query structure with anchors and relations erased.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Anchor,
    Project(Box<Shape>),
    And(Box<Shape>, Box<Shape>),
    Or(Box<Shape>, Box<Shape>),
    Not(Box<Shape>),
}

fn p(s: Shape) -> Shape {
    Shape::Project(Box::new(s))
}
fn i(a: Shape, b: Shape) -> Shape {
    Shape::And(Box::new(a), Box::new(b))
}
fn u(a: Shape, b: Shape) -> Shape {
    Shape::Or(Box::new(a), Box::new(b))
}
fn n(a: Shape) -> Shape {
    Shape::Not(Box::new(a))
}
fn e() -> Shape {
    Shape::Anchor
}

impl Shape {
    pub fn of(expr: &QueryExpr) -> Shape {
        match expr {
            QueryExpr::Anchor(_) => Shape::Anchor,
            QueryExpr::Project(_, a) | QueryExpr::InverseProject(_, a) => p(Shape::of(a)),
            QueryExpr::And(a, b) => i(Shape::of(a), Shape::of(b)),
            QueryExpr::Or(a, b) => u(Shape::of(a), Shape::of(b)),
            QueryExpr::Not(a) => n(Shape::of(a)),
        }
    }

    /// Signature invariant under swapping the operands of `and` / `or`.
    pub fn canonical(&self) -> String {
        match self {
            Shape::Anchor => "e".into(),
            Shape::Project(a) => format!("p({})", a.canonical()),
            Shape::Not(a) => format!("n({})", a.canonical()),
            Shape::And(a, b) | Shape::Or(a, b) => {
                let mut parts = [a.canonical(), b.canonical()];
                parts.sort();
                let op = if matches!(self, Shape::And(..)) { 'i' } else { 'u' };
                format!("{op}({},{})", parts[0], parts[1])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryType {
    #[serde(rename = "1p")]
    P1,
    #[serde(rename = "2p")]
    P2,
    #[serde(rename = "3p")]
    P3,
    #[serde(rename = "2i")]
    I2,
    #[serde(rename = "3i")]
    I3,
    #[serde(rename = "ip")]
    Ip,
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "2u")]
    U2,
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "2in")]
    In2,
    #[serde(rename = "3in")]
    In3,
    #[serde(rename = "inp")]
    Inp,
    #[serde(rename = "pin")]
    Pin,
    #[serde(rename = "pni")]
    Pni,
}

impl QueryType {
    pub const ALL: [QueryType; 14] = [
        QueryType::P1,
        QueryType::P2,
        QueryType::P3,
        QueryType::I2,
        QueryType::I3,
        QueryType::Ip,
        QueryType::Pi,
        QueryType::U2,
        QueryType::Up,
        QueryType::In2,
        QueryType::In3,
        QueryType::Inp,
        QueryType::Pin,
        QueryType::Pni,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryType::P1 => "1p",
            QueryType::P2 => "2p",
            QueryType::P3 => "3p",
            QueryType::I2 => "2i",
            QueryType::I3 => "3i",
            QueryType::Ip => "ip",
            QueryType::Pi => "pi",
            QueryType::U2 => "2u",
            QueryType::Up => "up",
            QueryType::In2 => "2in",
            QueryType::In3 => "3in",
            QueryType::Inp => "inp",
            QueryType::Pin => "pin",
            QueryType::Pni => "pni",
        }
    }

    pub fn template(self) -> Shape {
        match self {
            QueryType::P1 => p(e()),
            QueryType::P2 => p(p(e())),
            QueryType::P3 => p(p(p(e()))),
            QueryType::I2 => i(p(e()), p(e())),
            QueryType::I3 => i(i(p(e()), p(e())), p(e())),
            QueryType::Ip => p(i(p(e()), p(e()))),
            QueryType::Pi => i(p(p(e())), p(e())),
            QueryType::U2 => u(p(e()), p(e())),
            QueryType::Up => p(u(p(e()), p(e()))),
            QueryType::In2 => i(p(e()), n(p(e()))),
            QueryType::In3 => i(i(p(e()), p(e())), n(p(e()))),
            QueryType::Inp => p(i(p(e()), n(p(e())))),
            QueryType::Pin => i(p(p(e())), n(p(e()))),
            QueryType::Pni => i(n(p(p(e()))), p(e())),
        }
    }

    pub fn has_negation(self) -> bool {
        matches!(
            self,
            QueryType::In2 | QueryType::In3 | QueryType::Inp | QueryType::Pin | QueryType::Pni
        )
    }

    /// The type whose structure matches `expr`, up to operand order.
    pub fn detect(expr: &QueryExpr) -> Option<QueryType> {
        let sig = Shape::of(expr).canonical();
        QueryType::ALL
            .into_iter()
            .find(|t| t.template().canonical() == sig)
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown query type `{s}`")))
    }
}

/// Reads a BetaE-style nested tuple. `[e, [r1, r2, ...]]` is a relation
/// chain from anchor `e`, where `-2` negates the chain so far; a list of
/// branches is their intersection, or their union when it ends in `[-1]`;
/// `[branches, [r...]]` applies a chain to a combined branch set.
pub fn from_betae(value: &Value, g: &KnowledgeGraph) -> Result<QueryExpr> {
    let expr = betae_node(value, g)?;
    expr.validate()?;
    Ok(expr)
}

fn bad(v: &Value) -> Error {
    Error::InvalidQuery(format!("unrecognised query structure {v}"))
}

fn int_list(v: &Value) -> Option<Vec<i64>> {
    v.as_array()?.iter().map(Value::as_i64).collect()
}

fn betae_node(v: &Value, g: &KnowledgeGraph) -> Result<QueryExpr> {
    let items = v.as_array().ok_or_else(|| bad(v))?;
    if items.len() == 2 {
        if let Some(chain) = int_list(&items[1]).filter(|c| c.as_slice() != [-1] && !c.is_empty()) {
            let base = match items[0].as_i64() {
                Some(e) => {
                    let id = u32::try_from(e).map_err(|_| bad(v))?;
                    g.check_entity(EntityId(id))?;
                    QueryExpr::anchor(id)
                }
                None => betae_node(&items[0], g)?,
            };
            return apply_chain(base, &chain, g);
        }
    }
    let (branches, union) = match items.last().and_then(int_list) {
        Some(l) if l.as_slice() == [-1] => (&items[..items.len() - 1], true),
        _ => (&items[..], false),
    };
    if branches.len() < 2 {
        return Err(bad(v));
    }
    let mut parts = branches.iter().map(|b| betae_node(b, g));
    let mut acc = parts.next().expect("two branches")?;
    for part in parts {
        let part = part?;
        acc = if union {
            QueryExpr::or(acc, part)
        } else {
            QueryExpr::and(acc, part)
        };
    }
    Ok(acc)
}

fn apply_chain(mut expr: QueryExpr, chain: &[i64], g: &KnowledgeGraph) -> Result<QueryExpr> {
    for &r in chain {
        expr = match r {
            -2 => QueryExpr::not(expr),
            r if r >= 0 => {
                let id = u32::try_from(r)
                    .map_err(|_| Error::InvalidQuery(format!("relation id {r} too large")))?;
                g.check_relation(RelationId(id))?;
                QueryExpr::project(id, expr)
            }
            r => return Err(Error::InvalidQuery(format!("invalid chain marker {r}"))),
        };
    }
    Ok(expr)
}
