//! Sampling queries of a given structure from a train/full graph pair.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, GraphPair, KnowledgeGraph};

use super::expr::QueryExpr;
use super::fuzzy::ProjectionMode;
use super::program::{compile, execute, QueryProgram};
use super::shape::{QueryType, Shape};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySample {
    pub query_type: QueryType,
    pub query: QueryExpr,
    /// Answers already derivable on the train graph.
    pub easy: Vec<EntityId>,
    /// Answers that need at least one edge missing from the train graph.
    pub hard: Vec<EntityId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub count: usize,
    pub max_answers: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

impl SampleOptions {
    pub fn new(count: usize, seed: u64) -> Self {
        SampleOptions {
            count,
            max_answers: 100,
            seed,
            max_attempts: count.saturating_mul(1000).max(1000),
        }
    }
}

/// Answer set under boolean execution.
pub fn boolean_answers(g: &KnowledgeGraph, prog: &QueryProgram) -> Result<Vec<EntityId>> {
    Ok(execute(g, prog, ProjectionMode::Max)?.members(0.5))
}

/// Grounds `shape` so that `target` answers it on `g` (ignoring negation,
/// whose branch is grounded from a random entity and checked afterwards).
fn ground<R: Rng>(shape: &Shape, target: EntityId, g: &KnowledgeGraph, rng: &mut R) -> Option<QueryExpr> {
    match shape {
        Shape::Anchor => Some(QueryExpr::Anchor(vec![target])),
        Shape::Project(sub) => {
            let &e = g.incoming(target).choose(rng)?;
            let t = g.edge(e);
            Some(QueryExpr::Project(t.relation, Box::new(ground(sub, t.head, g, rng)?)))
        }
        Shape::And(a, b) => Some(QueryExpr::and(
            ground(a, target, g, rng)?,
            ground(b, target, g, rng)?,
        )),
        Shape::Or(a, b) => Some(QueryExpr::or(
            ground(a, target, g, rng)?,
            ground(b, target, g, rng)?,
        )),
        Shape::Not(sub) => {
            let other = EntityId(rng.gen_range(0..g.entity_count() as u32));
            Some(QueryExpr::not(ground(sub, other, g, rng)?))
        }
    }
}

/// Rejection-samples `opts.count` queries of type `qtype`. A sample is kept
/// when it has at least one hard answer, at most `max_answers` answers on the
/// full graph, and its train answers are a subset of its full answers.
pub fn sample_queries(
    pair: &GraphPair,
    qtype: QueryType,
    opts: &SampleOptions,
) -> Result<Vec<QuerySample>> {
    let full = &pair.full;
    if full.edge_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let shape = qtype.template();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.count);
    let mut attempts = 0;
    while out.len() < opts.count {
        if attempts == opts.max_attempts {
            return Err(Error::SamplingExhausted {
                attempts,
                found: out.len(),
                wanted: opts.count,
            });
        }
        attempts += 1;
        let target = EntityId(rng.gen_range(0..full.entity_count() as u32));
        let Some(query) = ground(&shape, target, full, &mut rng) else {
            continue;
        };
        let prog = compile(&query)?;
        let full_answers = boolean_answers(full, &prog)?;
        if full_answers.is_empty() || full_answers.len() > opts.max_answers {
            continue;
        }
        let easy = boolean_answers(&pair.train, &prog)?;
        // Both lists are sorted by id.
        if !easy.iter().all(|e| full_answers.binary_search(e).is_ok()) {
            continue;
        }
        let hard: Vec<EntityId> = full_answers
            .iter()
            .filter(|e| easy.binary_search(e).is_err())
            .copied()
            .collect();
        if hard.is_empty() {
            continue;
        }
        out.push(QuerySample {
            query_type: qtype,
            query,
            easy,
            hard,
        });
    }
    Ok(out)
}

/// Interchange form of a sample, with the query rendered as text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    #[serde(rename = "type")]
    pub query_type: QueryType,
    pub query: String,
    pub program: QueryProgram,
    pub easy: Vec<EntityId>,
    pub hard: Vec<EntityId>,
}

impl QueryRecord {
    pub fn new(sample: &QuerySample, g: &KnowledgeGraph) -> Result<Self> {
        Ok(QueryRecord {
            query_type: sample.query_type,
            query: sample.query.to_sexpr(g),
            program: compile(&sample.query)?,
            easy: sample.easy.clone(),
            hard: sample.hard.clone(),
        })
    }
}
