use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId};

/// Membership degrees in `[0, 1]` over every entity of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuzzySet(Vec<f64>);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// `y_v = 1 - prod (1 - x_u)` over the edges into `v`.
    #[default]
    NoisyOr,
    /// `y_v = max x_u` over the edges into `v`.
    Max,
}

impl FuzzySet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_range(&values)?;
        Ok(FuzzySet(values))
    }

    pub fn zeros(n: usize) -> Self {
        FuzzySet(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        FuzzySet(vec![1.0; n])
    }

    /// Boolean indicator of `entities` over a universe of `n`.
    pub fn indicator(n: usize, entities: &[EntityId]) -> Result<Self> {
        let mut v = vec![0.0; n];
        for e in entities {
            if e.index() >= n {
                return Err(Error::IdOutOfRange {
                    kind: "entity",
                    id: e.index(),
                    count: n,
                });
            }
            v[e.index()] = 1.0;
        }
        Ok(FuzzySet(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_boolean(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    fn zip_with(&self, other: &FuzzySet, f: impl Fn(f64, f64) -> f64) -> Result<FuzzySet> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        FuzzySet::new(self.0.iter().zip(&other.0).map(|(&x, &y)| f(x, y)).collect())
    }

    /// Product t-norm.
    pub fn conj(&self, other: &FuzzySet) -> Result<FuzzySet> {
        self.zip_with(other, |x, y| x * y)
    }

    /// Probabilistic sum `x + y - xy`. The result can overshoot 1 by an ulp
    /// through rounding, so it is capped there.
    pub fn disj(&self, other: &FuzzySet) -> Result<FuzzySet> {
        self.zip_with(other, |x, y| (x + y - x * y).min(1.0))
    }

    pub fn neg(&self) -> Result<FuzzySet> {
        FuzzySet::new(self.0.iter().map(|&x| 1.0 - x).collect())
    }

    /// Number of entities with membership strictly above `tau`.
    pub fn cardinality(&self, tau: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "cardinality threshold must lie in [0, 1], got {tau}"
            )));
        }
        Ok(self.0.iter().filter(|&&x| x > tau).count())
    }

    /// Entities with membership strictly above `tau`, ascending by id.
    pub fn members(&self, tau: f64) -> Vec<EntityId> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > tau)
            .map(|(i, _)| EntityId(i as u32))
            .collect()
    }

    /// Entities with nonzero membership, best first; ties by ascending id.
    pub fn ranked(&self) -> Vec<(EntityId, f64)> {
        let mut out: Vec<(EntityId, f64)> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, &x)| (EntityId(i as u32), x))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

fn check_range(values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !(0.0..=1.0).contains(x)) {
        Some(entity) => Err(Error::OutOfRange {
            entity,
            value: values[entity],
        }),
        None => Ok(()),
    }
}

/// Fuzzy projection through `relation`: mass flows from heads to tails.
pub fn project(
    g: &KnowledgeGraph,
    x: &FuzzySet,
    relation: RelationId,
    mode: ProjectionMode,
) -> Result<FuzzySet> {
    relational_image(g, x, relation, mode, false)
}

/// Fuzzy projection against `relation`: mass flows from tails to heads.
pub fn inverse_project(
    g: &KnowledgeGraph,
    x: &FuzzySet,
    relation: RelationId,
    mode: ProjectionMode,
) -> Result<FuzzySet> {
    relational_image(g, x, relation, mode, true)
}

fn relational_image(
    g: &KnowledgeGraph,
    x: &FuzzySet,
    relation: RelationId,
    mode: ProjectionMode,
    inverse: bool,
) -> Result<FuzzySet> {
    g.check_relation(relation)?;
    if x.len() != g.entity_count() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: g.entity_count(),
        });
    }
    let xs = x.values();
    // Per target: product of complements (noisy-or) or running max.
    let mut acc = match mode {
        ProjectionMode::NoisyOr => vec![1.0; g.entity_count()],
        ProjectionMode::Max => vec![0.0; g.entity_count()],
    };
    for &e in g.with_relation(relation) {
        let t = g.edge(e);
        let (from, to) = if inverse {
            (t.tail.index(), t.head.index())
        } else {
            (t.head.index(), t.tail.index())
        };
        match mode {
            ProjectionMode::NoisyOr => acc[to] *= 1.0 - xs[from],
            ProjectionMode::Max => acc[to] = acc[to].max(xs[from]),
        }
    }
    if mode == ProjectionMode::NoisyOr {
        acc.iter_mut().for_each(|a| *a = 1.0 - *a);
    }
    FuzzySet::new(acc)
}
