//! Generalized Bellman-Ford over pluggable semirings.
//!
//! For a fixed source `u` the engine iterates
//!
//! ```text
//! h0(v) = one  if v == u, zero otherwise
//! h(v)  = (plus over edges (x, r, v) of h_prev(x) times w(e)) plus h0(v)
//! ```
//!
//! After `t` iterations `h(v)` aggregates every path from `u` to `v` with at
//! most `t` edges, including paths that revisit nodes. The five classical
//! instantiations (Katz, personalized PageRank, graph distance, widest path,
//! most reliable path) are exposed through [`PathMethod`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};

/// Which way the plus-aggregate moves when more paths are added.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NaturalOrder {
    /// Aggregates only grow numerically (max, or + over nonnegative terms).
    Ascending,
    /// Aggregates only shrink numerically (min).
    Descending,
}

/// The `(plus, times, zero, one)` algebra over `f64` values.
pub trait Semiring: Sync {
    fn zero(&self) -> f64;
    fn one(&self) -> f64;
    fn plus(&self, a: f64, b: f64) -> f64;
    fn times(&self, a: f64, b: f64) -> f64;
    fn order(&self) -> NaturalOrder;

    /// Whether fixed points are detected by exact equality rather than a
    /// tolerance.
    fn exact_convergence(&self) -> bool;

    /// Whether infinite values are legitimate members of the domain.
    fn admits_infinity(&self) -> bool;

    /// `a` lies at or below `b` in the natural order, i.e. `a` aggregates a
    /// subset of the paths behind `b`.
    fn dominated(&self, a: f64, b: f64) -> bool {
        match self.order() {
            NaturalOrder::Ascending => a <= b,
            NaturalOrder::Descending => a >= b,
        }
    }

    /// Totally ordered key where larger means "more path mass".
    fn priority_key(&self, v: f64) -> f64 {
        match self.order() {
            NaturalOrder::Ascending => v,
            NaturalOrder::Descending => -v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardSemiring {
    /// `(+, x, 0, 1)` over nonnegative reals.
    SumProduct,
    /// `(min, +, +inf, 0)`.
    MinPlus,
    /// `(max, min, -inf, +inf)`.
    MaxMin,
    /// `(max, x, 0, 1)` over `[0, 1]`.
    MaxProduct,
}

impl StandardSemiring {
    pub const ALL: [StandardSemiring; 4] = [
        StandardSemiring::SumProduct,
        StandardSemiring::MinPlus,
        StandardSemiring::MaxMin,
        StandardSemiring::MaxProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StandardSemiring::SumProduct => "sum-product",
            StandardSemiring::MinPlus => "min-plus",
            StandardSemiring::MaxMin => "max-min",
            StandardSemiring::MaxProduct => "max-product",
        }
    }

    pub fn is_idempotent(self) -> bool {
        !matches!(self, StandardSemiring::SumProduct)
    }
}

impl Semiring for StandardSemiring {
    #[inline]
    fn zero(&self) -> f64 {
        match self {
            StandardSemiring::SumProduct | StandardSemiring::MaxProduct => 0.0,
            StandardSemiring::MinPlus => f64::INFINITY,
            StandardSemiring::MaxMin => f64::NEG_INFINITY,
        }
    }

    #[inline]
    fn one(&self) -> f64 {
        match self {
            StandardSemiring::SumProduct | StandardSemiring::MaxProduct => 1.0,
            StandardSemiring::MinPlus => 0.0,
            StandardSemiring::MaxMin => f64::INFINITY,
        }
    }

    #[inline]
    fn plus(&self, a: f64, b: f64) -> f64 {
        match self {
            StandardSemiring::SumProduct => a + b,
            StandardSemiring::MinPlus => a.min(b),
            StandardSemiring::MaxMin | StandardSemiring::MaxProduct => a.max(b),
        }
    }

    #[inline]
    fn times(&self, a: f64, b: f64) -> f64 {
        match self {
            StandardSemiring::SumProduct | StandardSemiring::MaxProduct => a * b,
            StandardSemiring::MinPlus => a + b,
            StandardSemiring::MaxMin => a.min(b),
        }
    }

    fn order(&self) -> NaturalOrder {
        match self {
            StandardSemiring::MinPlus => NaturalOrder::Descending,
            _ => NaturalOrder::Ascending,
        }
    }

    fn exact_convergence(&self) -> bool {
        matches!(self, StandardSemiring::MinPlus | StandardSemiring::MaxMin)
    }

    fn admits_infinity(&self) -> bool {
        matches!(self, StandardSemiring::MinPlus | StandardSemiring::MaxMin)
    }
}

/// Checks every semiring law on one triple. Returns the first law that fails.
///
/// `tol` is an absolute tolerance; pass `0.0` for exact comparison.
pub fn check_laws<S: Semiring + ?Sized>(
    s: &S,
    a: f64,
    b: f64,
    c: f64,
    tol: f64,
) -> std::result::Result<(), &'static str> {
    let same = |x: f64, y: f64| x == y || (x - y).abs() <= tol;
    let (zero, one) = (s.zero(), s.one());
    let checks = [
        ("plus commutativity", s.plus(a, b), s.plus(b, a)),
        (
            "plus associativity",
            s.plus(s.plus(a, b), c),
            s.plus(a, s.plus(b, c)),
        ),
        ("plus identity", s.plus(a, zero), a),
        (
            "times associativity",
            s.times(s.times(a, b), c),
            s.times(a, s.times(b, c)),
        ),
        ("times left identity", s.times(one, a), a),
        ("times right identity", s.times(a, one), a),
        ("left absorption", s.times(zero, a), zero),
        ("right absorption", s.times(a, zero), zero),
        (
            "left distributivity",
            s.times(a, s.plus(b, c)),
            s.plus(s.times(a, b), s.times(a, c)),
        ),
        (
            "right distributivity",
            s.times(s.plus(b, c), a),
            s.plus(s.times(b, a), s.times(c, a)),
        ),
    ];
    for (law, lhs, rhs) in checks {
        if !same(lhs, rhs) {
            return Err(law);
        }
    }
    Ok(())
}

/// Per-edge weighting schemes of the classical path formulations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum PathMethod {
    /// Sum-product with `w(e) = beta * w_e`.
    Katz { beta: f64 },
    /// Sum-product with `w(e) = alpha * w_e / out_weight(head)`.
    Ppr { alpha: f64 },
    /// Min-plus with `w(e) = w_e`.
    Distance,
    /// Max-min with `w(e) = w_e`.
    Widest,
    /// Max-product with `w(e) = w_e`, weights in `[0, 1]`.
    Reliable,
}

impl PathMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PathMethod::Katz { .. } => "katz",
            PathMethod::Ppr { .. } => "ppr",
            PathMethod::Distance => "distance",
            PathMethod::Widest => "widest",
            PathMethod::Reliable => "reliable",
        }
    }

    pub fn semiring(&self) -> StandardSemiring {
        match self {
            PathMethod::Katz { .. } | PathMethod::Ppr { .. } => StandardSemiring::SumProduct,
            PathMethod::Distance => StandardSemiring::MinPlus,
            PathMethod::Widest => StandardSemiring::MaxMin,
            PathMethod::Reliable => StandardSemiring::MaxProduct,
        }
    }

    /// Semiring value of every edge, indexed by edge id.
    pub fn edge_values(&self, g: &KnowledgeGraph) -> Result<Vec<f64>> {
        match *self {
            PathMethod::Katz { beta } => {
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "katz beta must lie in (0, 1), got {beta}"
                    )));
                }
                Ok((0..g.edge_count()).map(|e| beta * g.weight(e)).collect())
            }
            PathMethod::Ppr { alpha } => ppr_weights(g, alpha),
            PathMethod::Distance | PathMethod::Widest => {
                Ok((0..g.edge_count()).map(|e| g.weight(e)).collect())
            }
            PathMethod::Reliable => (0..g.edge_count())
                .map(|e| {
                    let w = g.weight(e);
                    if (0.0..=1.0).contains(&w) {
                        Ok(w)
                    } else {
                        Err(Error::WeightOutOfRange {
                            edge: e,
                            weight: w,
                            expected: "[0, 1]",
                        })
                    }
                })
                .collect(),
        }
    }
}

/// Row-normalized transition weights scaled by `alpha`: every node with
/// outgoing edges distributes exactly `alpha` over them.
pub fn ppr_weights(g: &KnowledgeGraph, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ppr alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let mut values = vec![0.0; g.edge_count()];
    for u in 0..g.entity_count() {
        let out = g.outgoing(EntityId(u as u32));
        if out.is_empty() {
            continue;
        }
        let total: f64 = out.iter().map(|&e| g.weight(e)).sum();
        if total <= 0.0 {
            return Err(Error::ZeroOutWeight(u));
        }
        for &e in out {
            values[e] = alpha * g.weight(e) / total;
        }
    }
    Ok(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterations {
    pub max: usize,
    /// Stop once the largest per-entity change is within this bound
    /// (ignored by exact semirings, which stop on equality).
    pub tol: Option<f64>,
}

impl Iterations {
    pub fn fixed(max: usize) -> Self {
        Iterations { max, tol: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationState {
    pub source: EntityId,
    pub values: Vec<f64>,
    /// Number of iterations actually performed.
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn boundary<S: Semiring + ?Sized>(s: &S, n: usize, source: EntityId) -> Vec<f64> {
    let mut h = vec![s.zero(); n];
    h[source.index()] = s.one();
    h
}

pub(crate) fn check_finite<S: Semiring + ?Sized>(
    s: &S,
    values: &[f64],
    iteration: usize,
) -> Result<()> {
    let bad = values
        .iter()
        .position(|v| v.is_nan() || (v.is_infinite() && !s.admits_infinity()));
    match bad {
        Some(entity) => Err(Error::Diverged { iteration, entity }),
        None => Ok(()),
    }
}

pub(crate) fn has_converged<S: Semiring + ?Sized>(
    s: &S,
    prev: &[f64],
    next: &[f64],
    tol: f64,
) -> bool {
    if s.exact_convergence() {
        return prev == next;
    }
    prev.iter().zip(next).all(|(&a, &b)| a == b || (a - b).abs() <= tol)
}

/// Runs the generalized Bellman-Ford iteration from `source`.
pub fn propagate<S: Semiring + ?Sized>(
    g: &KnowledgeGraph,
    source: EntityId,
    s: &S,
    edge_values: &[f64],
    iters: Iterations,
) -> Result<PropagationState> {
    g.check_entity(source)?;
    if edge_values.len() != g.edge_count() {
        return Err(Error::InvalidParameter(format!(
            "{} edge values for {} edges",
            edge_values.len(),
            g.edge_count()
        )));
    }
    let n = g.entity_count();
    let h0 = boundary(s, n, source);
    let mut h = h0.clone();
    let mut next = vec![s.zero(); n];
    let mut converged = false;
    let mut done = 0;
    for t in 1..=iters.max {
        for (v, slot) in next.iter_mut().enumerate() {
            let mut acc = s.zero();
            for &e in g.incoming(EntityId(v as u32)) {
                let x = g.edge(e).head.index();
                acc = s.plus(acc, s.times(h[x], edge_values[e]));
            }
            *slot = s.plus(acc, h0[v]);
        }
        check_finite(s, &next, t)?;
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
    Ok(PropagationState {
        source,
        values: h,
        iterations: done,
        converged,
    })
}

/// Convenience wrapper: edge values and semiring taken from `method`.
pub fn run(
    g: &KnowledgeGraph,
    source: EntityId,
    method: &PathMethod,
    iters: Iterations,
) -> Result<PropagationState> {
    let values = method.edge_values(g)?;
    propagate(g, source, &method.semiring(), &values, iters)
}

/// Runs one propagation per source in parallel. Row `i` belongs to
/// `sources[i]` regardless of scheduling.
pub fn score_pairs<S: Semiring + ?Sized>(
    g: &KnowledgeGraph,
    sources: &[EntityId],
    s: &S,
    edge_values: &[f64],
    iters: Iterations,
) -> Result<Vec<PropagationState>> {
    sources
        .par_iter()
        .map(|&u| propagate(g, u, s, edge_values, iters))
        .collect()
}

pub fn score_pairs_with(
    g: &KnowledgeGraph,
    sources: &[EntityId],
    method: &PathMethod,
    iters: Iterations,
) -> Result<Vec<PropagationState>> {
    let values = method.edge_values(g)?;
    score_pairs(g, sources, &method.semiring(), &values, iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Duplicates, Triplet, Vocab};

    fn weighted(n: usize, edges: &[(u32, u32, f64)]) -> KnowledgeGraph {
        KnowledgeGraph::new(
            Vocab::numbered(n),
            Vocab::numbered(1),
            edges.iter().map(|&(h, t, _)| Triplet::new(h, 0, t)).collect(),
            Some(edges.iter().map(|e| e.2).collect()),
            Duplicates::Deduplicate,
        )
        .unwrap()
    }

    #[test]
    fn katz_single_edge() {
        let g = weighted(2, &[(0, 1, 1.0)]);
        let st = run(&g, EntityId(0), &PathMethod::Katz { beta: 0.5 }, Iterations::fixed(3)).unwrap();
        assert_eq!(st.values, vec![1.0, 0.5]);
        assert_eq!(st.iterations, 3);
    }

    #[test]
    fn distance_chain() {
        let g = weighted(3, &[(0, 1, 2.0), (1, 2, 3.0)]);
        let st = run(&g, EntityId(0), &PathMethod::Distance, Iterations::fixed(2)).unwrap();
        assert_eq!(st.values, vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn zero_iterations_is_boundary() {
        let g = weighted(3, &[(0, 1, 0.5), (1, 2, 0.25)]);
        for method in [
            PathMethod::Katz { beta: 0.3 },
            PathMethod::Ppr { alpha: 0.85 },
            PathMethod::Distance,
            PathMethod::Widest,
            PathMethod::Reliable,
        ] {
            let s = method.semiring();
            let st = run(&g, EntityId(1), &method, Iterations::fixed(0)).unwrap();
            assert_eq!(st.values, vec![s.zero(), s.one(), s.zero()], "{method:?}");
        }
    }

    #[test]
    fn ppr_two_out_edges() {
        let g = weighted(3, &[(0, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(ppr_weights(&g, 0.5).unwrap(), vec![0.25, 0.25]);
    }

    #[test]
    fn ppr_rows_sum_to_alpha() {
        let g = weighted(3, &[(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0), (2, 0, 5.0), (2, 1, 5.0)]);
        let w = ppr_weights(&g, 0.85).unwrap();
        // Hand normalization: row 0 = {1/4, 3/4}, row 1 = {1}, row 2 = {1/2, 1/2}.
        let expected = [0.85 * 0.25, 0.85 * 0.75, 0.85, 0.85 * 0.5, 0.85 * 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for u in 0..3 {
            let row: f64 = g.outgoing(EntityId(u)).iter().map(|&e| w[e]).sum();
            assert!((row - 0.85).abs() < 1e-12);
        }
    }

    #[test]
    fn ppr_zero_out_weight() {
        let g = weighted(2, &[(0, 1, 0.0)]);
        assert!(matches!(ppr_weights(&g, 0.5), Err(Error::ZeroOutWeight(0))));
    }

    #[test]
    fn parameter_validation() {
        let g = weighted(2, &[(0, 1, 2.0)]);
        assert!(PathMethod::Katz { beta: 1.0 }.edge_values(&g).is_err());
        assert!(PathMethod::Katz { beta: 0.0 }.edge_values(&g).is_err());
        assert!(PathMethod::Ppr { alpha: 1.5 }.edge_values(&g).is_err());
        assert!(PathMethod::Reliable.edge_values(&g).is_err());
        assert!(PathMethod::Widest.edge_values(&g).is_ok());
    }

    #[test]
    fn divergence_reported() {
        // A self-loop with value 2 doubles the mass every iteration.
        let g = weighted(1, &[(0, 0, 2.0)]);
        let err = propagate(
            &g,
            EntityId(0),
            &StandardSemiring::SumProduct,
            &[2.0],
            Iterations::fixed(2000),
        )
        .unwrap_err();
        assert!(err.is_divergence(), "{err}");
    }

    #[test]
    fn exact_semiring_converges_on_equality() {
        let g = weighted(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]);
        let st = run(
            &g,
            EntityId(0),
            &PathMethod::Distance,
            Iterations { max: 50, tol: Some(0.0) },
        )
        .unwrap();
        assert!(st.converged);
        // Values settle after two iterations, detected on the third.
        assert_eq!(st.iterations, 3);
        assert_eq!(st.values, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn tolerance_convergence_for_katz() {
        let g = weighted(2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let st = run(
            &g,
            EntityId(0),
            &PathMethod::Katz { beta: 0.5 },
            Iterations { max: 1000, tol: Some(1e-9) },
        )
        .unwrap();
        assert!(st.converged && st.iterations < 100);
        // Closed form: h(0) = 1 / (1 - 0.25), h(1) = 0.5 / (1 - 0.25).
        assert!((st.values[0] - 4.0 / 3.0).abs() < 1e-8);
        assert!((st.values[1] - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn laws_hold_on_identities() {
        for s in StandardSemiring::ALL {
            let (z, o) = (s.zero(), s.one());
            for (a, b, c) in [(z, o, z), (o, o, o), (z, z, z)] {
                assert_eq!(check_laws(&s, a, b, c, 0.0), Ok(()), "{}", s.name());
            }
        }
    }

    #[test]
    fn batch_rows_follow_sources() {
        let g = weighted(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]);
        let m = PathMethod::Katz { beta: 0.4 };
        let sources = [EntityId(2), EntityId(0)];
        let rows = score_pairs_with(&g, &sources, &m, Iterations::fixed(4)).unwrap();
        for (row, &src) in rows.iter().zip(&sources) {
            assert_eq!(row, &run(&g, src, &m, Iterations::fixed(4)).unwrap());
        }
    }
}
