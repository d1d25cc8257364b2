//! Pruned propagation: per iteration only the top-K reached nodes send
//! messages, and only the top-L of their outgoing edges are kept.
//!
//! The recurrence is otherwise the one of [`crate::semiring::propagate`]:
//! each iteration recomputes every node from the boundary plus the messages
//! over the retained edges, visiting incoming edges in the same order as the
//! unpruned engine. At full capacity the two are therefore bitwise identical,
//! and with pruning every value aggregates a subset of the exact path set.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::semiring::{
    boundary, check_finite, has_converged, propagate, Iterations, PathMethod, PropagationState,
    Semiring,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum PriorityFunction {
    /// Current value of the node under the semiring's natural order.
    Value,
    /// Fixed per-node scores, typically personalized PageRank from the source.
    Ppr { scores: Vec<f64> },
    /// Total (in + out) degree.
    Degree,
    /// Fresh uniform keys every iteration, reproducible from the seed.
    Random { seed: u64 },
}

impl PriorityFunction {
    /// PPR scores from `source` after `iters` power iterations.
    pub fn ppr(g: &KnowledgeGraph, source: EntityId, alpha: f64, iters: usize) -> Result<Self> {
        let method = PathMethod::Ppr { alpha };
        let values = method.edge_values(g)?;
        let st = propagate(g, source, &method.semiring(), &values, Iterations::fixed(iters))?;
        Ok(PriorityFunction::Ppr { scores: st.values })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorityFunction::Value => "value",
            PriorityFunction::Ppr { .. } => "ppr",
            PriorityFunction::Degree => "degree",
            PriorityFunction::Random { .. } => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneConfig {
    /// `edges = None` keeps every edge leaving the selected nodes.
    Fixed { nodes: usize, edges: Option<usize> },
    /// `K = ceil(node_ratio * |V|)`, `L = ceil(degree_ratio * K * |E| / |V|)`.
    Ratio {
        node_ratio: f64,
        degree_ratio: Option<f64>,
    },
}

impl PruneConfig {
    pub fn full() -> Self {
        PruneConfig::Ratio {
            node_ratio: 1.0,
            degree_ratio: None,
        }
    }

    /// Resolves to concrete `(K, L)` for `g`.
    pub fn resolve(&self, g: &KnowledgeGraph) -> Result<(usize, Option<usize>)> {
        let n = g.entity_count();
        match *self {
            PruneConfig::Fixed { nodes, edges } => {
                if nodes == 0 || nodes > n {
                    return Err(Error::InvalidParameter(format!(
                        "node budget must lie in [1, {n}], got {nodes}"
                    )));
                }
                Ok((nodes, edges))
            }
            PruneConfig::Ratio {
                node_ratio,
                degree_ratio,
            } => {
                if !(node_ratio > 0.0 && node_ratio <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "node_ratio must lie in (0, 1], got {node_ratio}"
                    )));
                }
                let k = ((node_ratio * n as f64).ceil() as usize).clamp(1, n.max(1));
                let l = match degree_ratio {
                    None => None,
                    Some(r) if r > 0.0 && r.is_finite() => {
                        let avg = g.edge_count() as f64 / n.max(1) as f64;
                        Some((r * k as f64 * avg).ceil() as usize)
                    }
                    Some(r) => {
                        return Err(Error::InvalidParameter(format!(
                            "degree_ratio must be positive, got {r}"
                        )))
                    }
                };
                Ok((k, l))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub selected: Vec<EntityId>,
    /// Retained edge ids, in ranking order.
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub node_budget: usize,
    pub edge_budget: Option<usize>,
    pub iterations: Vec<IterationTrace>,
    pub messages: usize,
}

/// Descending by key, then ascending by id.
fn by_key(keys: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b))
}

#[allow(clippy::too_many_arguments)]
pub fn pruned_run<S: Semiring + ?Sized>(
    g: &KnowledgeGraph,
    source: EntityId,
    s: &S,
    edge_values: &[f64],
    priority: &PriorityFunction,
    cfg: &PruneConfig,
    iters: Iterations,
) -> Result<(PropagationState, PruneTrace)> {
    g.check_entity(source)?;
    let n = g.entity_count();
    if edge_values.len() != g.edge_count() {
        return Err(Error::InvalidParameter(format!(
            "{} edge values for {} edges",
            edge_values.len(),
            g.edge_count()
        )));
    }
    if let PriorityFunction::Ppr { scores } = priority {
        if scores.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} ppr scores for {n} entities",
                scores.len()
            )));
        }
    }
    let (k, l) = cfg.resolve(g)?;
    let mut rng = match priority {
        PriorityFunction::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let degree: Vec<f64> = match priority {
        PriorityFunction::Degree => (0..n)
            .map(|v| {
                let v = EntityId(v as u32);
                (g.in_degree(v) + g.out_degree(v)) as f64
            })
            .collect(),
        _ => Vec::new(),
    };

    let h0 = boundary(s, n, source);
    let mut h = h0.clone();
    let mut next = vec![s.zero(); n];
    let mut keys = vec![0.0; n];
    let mut retained = vec![false; g.edge_count()];
    let mut trace = PruneTrace {
        node_budget: k,
        edge_budget: l,
        ..PruneTrace::default()
    };
    let mut converged = false;
    let mut done = 0;

    for t in 1..=iters.max {
        match priority {
            PriorityFunction::Value => {
                for (key, &v) in keys.iter_mut().zip(&h) {
                    *key = s.priority_key(v);
                }
            }
            PriorityFunction::Ppr { scores } => keys.copy_from_slice(scores),
            PriorityFunction::Degree => keys.copy_from_slice(&degree),
            PriorityFunction::Random { .. } => {
                let rng = rng.as_mut().expect("seeded for random priority");
                for key in keys.iter_mut() {
                    *key = rng.gen::<f64>();
                }
            }
        }

        let zero = s.zero();
        let mut selected: Vec<usize> = (0..n).filter(|&v| h[v] != zero).collect();
        selected.sort_by(by_key(&keys));
        selected.truncate(k);

        let mut edges: Vec<usize> = selected
            .iter()
            .flat_map(|&x| g.outgoing(EntityId(x as u32)).iter().copied())
            .collect();
        edges.sort_by(|&a, &b| {
            let (ta, tb) = (g.edge(a).tail.index(), g.edge(b).tail.index());
            keys[tb]
                .total_cmp(&keys[ta])
                .then(ta.cmp(&tb))
                .then(a.cmp(&b))
        });
        if let Some(l) = l {
            edges.truncate(l);
        }
        for &e in &edges {
            retained[e] = true;
        }

        for (v, slot) in next.iter_mut().enumerate() {
            let mut acc = s.zero();
            for &e in g.incoming(EntityId(v as u32)) {
                if retained[e] {
                    let x = g.edge(e).head.index();
                    acc = s.plus(acc, s.times(h[x], edge_values[e]));
                }
            }
            *slot = s.plus(acc, h0[v]);
        }
        for &e in &edges {
            retained[e] = false;
        }
        check_finite(s, &next, t)?;

        trace.messages += edges.len();
        trace.iterations.push(IterationTrace {
            selected: selected.iter().map(|&v| EntityId(v as u32)).collect(),
            edges,
        });
        done = t;
        let stop = iters
            .tol
            .is_some_and(|tol| has_converged(s, &h, &next, tol));
        std::mem::swap(&mut h, &mut next);
        if stop {
            converged = true;
            break;
        }
    }

    Ok((
        PropagationState {
            source,
            values: h,
            iterations: done,
            converged,
        },
        trace,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleTopK {
    pub values: Vec<f64>,
    /// Positions in the flat input.
    pub indices: Vec<usize>,
}

/// Top-`k` per sample of a flat, variable-length batch, without padding.
///
/// One stable descending sort over all values followed by one stable sort
/// on sample id leaves every sample's elements contiguous and descending;
/// the first `k` of each segment are the answer. Ties keep the lower index
/// first. Errors if any sample has fewer than `k` elements.
pub fn grouped_topk(values: &[f64], sizes: &[usize], k: usize) -> Result<Vec<SampleTopK>> {
    if let Some((sample, &size)) = sizes.iter().enumerate().find(|(_, &s)| s < k) {
        return Err(Error::SampleTooSmall { sample, size, k });
    }
    grouped_topk_lenient(values, sizes, k)
}

/// Like [`grouped_topk`] but returns `min(size, k)` entries per sample.
pub fn grouped_topk_lenient(values: &[f64], sizes: &[usize], k: usize) -> Result<Vec<SampleTopK>> {
    let total: usize = sizes.iter().sum();
    if total != values.len() {
        return Err(Error::InvalidParameter(format!(
            "sample sizes sum to {total} but {} values were given",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::InvalidParameter(format!("NaN value at position {i}")));
    }
    let mut sample_of = Vec::with_capacity(total);
    for (sample, &size) in sizes.iter().enumerate() {
        sample_of.extend(std::iter::repeat_n(sample, size));
    }

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    // Stable: within a sample the descending order from above survives.
    order.sort_by_key(|&i| sample_of[i]);

    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &size in sizes {
        let take = size.min(k);
        let indices = order[start..start + take].to_vec();
        out.push(SampleTopK {
            values: indices.iter().map(|&i| values[i]).collect(),
            indices,
        });
        start += size;
    }
    Ok(out)
}
