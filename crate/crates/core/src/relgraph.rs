//! Lifting a knowledge graph to a graph over its relations.
//!
//! Two relations interact when they share an entity. Where the entity sits
//! in each edge gives the interaction type: head-to-head, tail-to-tail,
//! head-to-tail and tail-to-head. With `E_h` and `E_t` the entity-by-relation
//! incidence matrices, the four typed adjacencies are `E_h^T E_h`,
//! `E_t^T E_t`, `E_h^T E_t` and `E_t^T E_h`. They are computed row by row with
//! a sparse accumulator of length `|R|`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    H2h,
    T2t,
    H2t,
    T2h,
}

impl Interaction {
    pub const ALL: [Interaction; 4] = [
        Interaction::H2h,
        Interaction::T2t,
        Interaction::H2t,
        Interaction::T2h,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Interaction::H2h => "h2h",
            Interaction::T2t => "t2t",
            Interaction::H2t => "h2t",
            Interaction::T2h => "t2h",
        }
    }

    /// The interaction seen from the other relation's side.
    pub fn transpose(self) -> Self {
        match self {
            Interaction::H2t => Interaction::T2h,
            Interaction::T2h => Interaction::H2t,
            other => other,
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Interaction::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown interaction `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Number of distinct shared entities.
    #[default]
    Entities,
    /// Number of co-incident edge pairs.
    EdgePairs,
}

/// Sparse entity-by-relation incidence, stored per entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    /// `rows[e]` lists `(relation, edge count)` sorted by relation.
    pub rows: Vec<Vec<(u32, u64)>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidencePair {
    pub head: Incidence,
    pub tail: Incidence,
}

impl IncidencePair {
    pub fn of(g: &KnowledgeGraph) -> Self {
        let n = g.entity_count();
        let mut head = vec![Vec::new(); n];
        let mut tail = vec![Vec::new(); n];
        for e in 0..n {
            let id = EntityId(e as u32);
            head[e] = tally(g.outgoing(id).iter().map(|&i| g.edge(i).relation.0));
            tail[e] = tally(g.incoming(id).iter().map(|&i| g.edge(i).relation.0));
        }
        IncidencePair {
            head: Incidence { rows: head },
            tail: Incidence { rows: tail },
        }
    }
}

fn tally(rels: impl Iterator<Item = u32>) -> Vec<(u32, u64)> {
    let mut rels: Vec<u32> = rels.collect();
    rels.sort_unstable();
    let mut out: Vec<(u32, u64)> = Vec::new();
    for r in rels {
        match out.last_mut() {
            Some((last, c)) if *last == r => *c += 1,
            _ => out.push((r, 1)),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from: RelationId,
    pub interaction: Interaction,
    pub to: RelationId,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationGraph {
    pub relation_names: Vec<String>,
    pub mode: CountMode,
    /// Per interaction, one sorted row per source relation: `(to, count)`.
    adjacency: [Vec<Vec<(u32, u64)>>; 4],
}

fn slot(i: Interaction) -> usize {
    i as usize
}

impl RelationGraph {
    pub fn relation_count(&self) -> usize {
        self.relation_names.len()
    }

    pub fn neighbors(&self, r: RelationId, i: Interaction) -> &[(u32, u64)] {
        &self.adjacency[slot(i)][r.index()]
    }

    pub fn count(&self, from: RelationId, i: Interaction, to: RelationId) -> u64 {
        let row = self.neighbors(from, i);
        row.binary_search_by_key(&to.0, |&(r, _)| r)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, from: RelationId, i: Interaction, to: RelationId) -> bool {
        self.count(from, i, to) > 0
    }

    /// All typed edges ordered by interaction, then source, then target.
    pub fn edges(&self) -> Vec<RelationEdge> {
        let mut out = Vec::new();
        for i in Interaction::ALL {
            for (from, row) in self.adjacency[slot(i)].iter().enumerate() {
                for &(to, count) in row {
                    out.push(RelationEdge {
                        from: RelationId(from as u32),
                        interaction: i,
                        to: RelationId(to),
                        count,
                    });
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().map(Vec::len).sum()
    }

    /// `relation1 \t interaction \t relation2 \t count`, one line per edge.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in self.edges() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                self.relation_names[e.from.index()],
                e.interaction,
                self.relation_names[e.to.index()],
                e.count
            )?;
        }
        Ok(())
    }
}

/// Lifts `g` as given. Callers wanting the inverse-augmented relation graph
/// should pass `g.add_inverses()`.
pub fn lift(g: &KnowledgeGraph, mode: CountMode) -> Result<RelationGraph> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let inc = IncidencePair::of(g);
    let r = g.relation_count();
    // (left factor, right factor) per interaction: A = L^T R.
    let factors = |i: Interaction| match i {
        Interaction::H2h => (&inc.head, &inc.head),
        Interaction::T2t => (&inc.tail, &inc.tail),
        Interaction::H2t => (&inc.head, &inc.tail),
        Interaction::T2h => (&inc.tail, &inc.head),
    };
    let adjacency = Interaction::ALL.map(|i| {
        let (left, right) = factors(i);
        transpose_product(left, right, r, mode)
    });
    Ok(RelationGraph {
        relation_names: g.relations().names().to_vec(),
        mode,
        adjacency,
    })
}

/// Rows of `L^T R` for two entity-major incidences.
fn transpose_product(
    left: &Incidence,
    right: &Incidence,
    relations: usize,
    mode: CountMode,
) -> Vec<Vec<(u32, u64)>> {
    // Relation-major view of the left factor so each output row can be built
    // with a dense accumulator over relations.
    let mut by_rel: Vec<Vec<(usize, u64)>> = vec![Vec::new(); relations];
    for (e, row) in left.rows.iter().enumerate() {
        for &(r, c) in row {
            by_rel[r as usize].push((e, c));
        }
    }
    let mut acc = vec![0u64; relations];
    let mut touched = Vec::new();
    by_rel
        .iter()
        .map(|entities| {
            for &(e, c1) in entities {
                for &(r2, c2) in &right.rows[e] {
                    let r2 = r2 as usize;
                    if acc[r2] == 0 {
                        touched.push(r2);
                    }
                    acc[r2] += match mode {
                        CountMode::Entities => 1,
                        CountMode::EdgePairs => c1 * c2,
                    };
                }
            }
            touched.sort_unstable();
            let row = touched
                .drain(..)
                .map(|r2| (r2 as u32, std::mem::take(&mut acc[r2])))
                .collect();
            row
        })
        .collect()
}
