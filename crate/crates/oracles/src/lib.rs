//! Slow, obviously-correct reference implementations and random instance
//! generators. Nothing here shares code with the engine beyond the graph
//! container and the semiring operator definitions.

use std::collections::{BTreeMap, BTreeSet};

use kgreason::query::QueryExpr;
use kgreason::{Duplicates, EntityId, KnowledgeGraph, Semiring, Triplet, Vocab};
use rand::Rng;

/// Random weighted graph with `1..=max_nodes` entities, `0..=max_edges`
/// edges over `relations` relation types and weights uniform in `[0, 1)`.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_nodes: usize,
    max_edges: usize,
    relations: usize,
) -> KnowledgeGraph {
    let n = rng.gen_range(1..=max_nodes);
    let m = rng.gen_range(0..=max_edges);
    let mut triplets = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        triplets.push(Triplet::new(
            rng.gen_range(0..n as u32),
            rng.gen_range(0..relations as u32),
            rng.gen_range(0..n as u32),
        ));
        weights.push(rng.gen::<f64>());
    }
    KnowledgeGraph::new(
        Vocab::numbered(n),
        Vocab::numbered(relations),
        triplets,
        Some(weights),
        Duplicates::Deduplicate,
    )
    .expect("generated graph is valid")
}

/// Unweighted random graph with exactly `n` entities.
pub fn random_unweighted<R: Rng>(rng: &mut R, n: usize, edges: usize, relations: usize) -> KnowledgeGraph {
    let triplets = (0..edges)
        .map(|_| {
            Triplet::new(
                rng.gen_range(0..n as u32),
                rng.gen_range(0..relations as u32),
                rng.gen_range(0..n as u32),
            )
        })
        .collect();
    KnowledgeGraph::from_triplets(n, relations, triplets).expect("generated graph is valid")
}

/// Aggregates every walk of at most `max_len` edges from `source`, for
/// several semirings at once. A walk's value is the left fold
/// `one * w(e1) * w(e2) * ...`; walks ending at a node are combined with
/// `plus` in depth-first order.
pub fn enumerate_walks(
    g: &KnowledgeGraph,
    source: EntityId,
    max_len: usize,
    semirings: &[(&dyn Semiring, &[f64])],
) -> Vec<Vec<f64>> {
    let n = g.entity_count();
    let mut acc: Vec<Vec<f64>> = semirings.iter().map(|(s, _)| vec![s.zero(); n]).collect();
    let start: Vec<f64> = semirings.iter().map(|(s, _)| s.one()).collect();
    let mut stack = vec![(source, 0usize, start)];
    while let Some((node, len, values)) = stack.pop() {
        for (k, (s, _)) in semirings.iter().enumerate() {
            let slot = &mut acc[k][node.index()];
            *slot = s.plus(*slot, values[k]);
        }
        if len == max_len {
            continue;
        }
        for e in 0..g.edge_count() {
            let t = g.edge(e);
            if t.head != node {
                continue;
            }
            let next: Vec<f64> = semirings
                .iter()
                .zip(&values)
                .map(|((s, w), &v)| s.times(v, w[e]))
                .collect();
            stack.push((t.tail, len + 1, next));
        }
    }
    acc
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Set semantics: anchors are sets, projection is the relational image,
/// negation is the complement in the full entity set.
pub fn eval_sets(g: &KnowledgeGraph, expr: &QueryExpr) -> BTreeSet<u32> {
    match expr {
        QueryExpr::Anchor(es) => es.iter().map(|e| e.0).collect(),
        QueryExpr::Project(r, a) => {
            let from = eval_sets(g, a);
            g.triplets()
                .iter()
                .filter(|t| t.relation == *r && from.contains(&t.head.0))
                .map(|t| t.tail.0)
                .collect()
        }
        QueryExpr::InverseProject(r, a) => {
            let from = eval_sets(g, a);
            g.triplets()
                .iter()
                .filter(|t| t.relation == *r && from.contains(&t.tail.0))
                .map(|t| t.head.0)
                .collect()
        }
        QueryExpr::And(a, b) => eval_sets(g, a).intersection(&eval_sets(g, b)).copied().collect(),
        QueryExpr::Or(a, b) => eval_sets(g, a).union(&eval_sets(g, b)).copied().collect(),
        QueryExpr::Not(a) => {
            let inner = eval_sets(g, a);
            (0..g.entity_count() as u32).filter(|e| !inner.contains(e)).collect()
        }
    }
}

/// `(r1, interaction, r2) -> (distinct shared entities, co-incident edge pairs)`
/// found by scanning every pair of edges touching each entity.
pub fn pairwise_lift(g: &KnowledgeGraph) -> BTreeMap<(u32, &'static str, u32), (u64, u64)> {
    let mut roles: Vec<Vec<(u32, bool)>> = vec![Vec::new(); g.entity_count()];
    for t in g.triplets() {
        roles[t.head.index()].push((t.relation.0, true));
        roles[t.tail.index()].push((t.relation.0, false));
    }
    let mut out: BTreeMap<(u32, &'static str, u32), (u64, u64)> = BTreeMap::new();
    for incident in &roles {
        let mut seen = BTreeSet::new();
        for &(r1, head1) in incident {
            for &(r2, head2) in incident {
                let kind = match (head1, head2) {
                    (true, true) => "h2h",
                    (false, false) => "t2t",
                    (true, false) => "h2t",
                    (false, true) => "t2h",
                };
                let entry = out.entry((r1, kind, r2)).or_default();
                entry.1 += 1;
                if seen.insert((r1, kind, r2)) {
                    entry.0 += 1;
                }
            }
        }
    }
    out
}

/// Filtered rank by sorting: the answer's tie block among unfiltered
/// candidates is located and its mean position returned.
pub fn sort_rank(scores: &[f64], answer: usize, known: &[usize]) -> f64 {
    let mut pool: Vec<f64> = (0..scores.len())
        .filter(|v| *v == answer || !known.contains(v))
        .map(|v| scores[v])
        .collect();
    pool.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let a = scores[answer];
    let first = pool.iter().position(|&s| s == a).unwrap() + 1;
    let last = pool.iter().rposition(|&s| s == a).unwrap() + 1;
    (first + last) as f64 / 2.0
}

/// Per-sample top-k by sorting each sample independently.
pub fn per_sample_topk(values: &[f64], sizes: &[usize], k: usize) -> Vec<Vec<(f64, usize)>> {
    let mut out = Vec::new();
    let mut start = 0;
    for &size in sizes {
        let mut items: Vec<(f64, usize)> = (start..start + size).map(|i| (values[i], i)).collect();
        items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        items.truncate(k);
        out.push(items);
        start += size;
    }
    out
}

/// All-pairs Mann-Whitney statistic.
pub fn pairwise_auroc(easy: &[f64], hard: &[f64]) -> f64 {
    let mut credit = 0.0;
    for &e in easy {
        for &h in hard {
            if e > h {
                credit += 1.0;
            } else if e == h {
                credit += 0.5;
            }
        }
    }
    credit / (easy.len() * hard.len()) as f64
}

/// Spearman by definition: mean ranks over tie groups, then Pearson.
pub fn definitional_spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Noisy-or projection recomputed edge by edge from the triplet list.
pub fn noisy_or_projection(g: &KnowledgeGraph, x: &[f64], relation: u32) -> Vec<f64> {
    (0..g.entity_count())
        .map(|v| {
            let mut miss = 1.0;
            for t in g.triplets() {
                if t.relation.0 == relation && t.tail.index() == v {
                    miss *= 1.0 - x[t.head.index()];
                }
            }
            1.0 - miss
        })
        .collect()
}
