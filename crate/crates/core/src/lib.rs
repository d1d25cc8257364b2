//! Symbolic reasoning over knowledge graphs: path formulations as semiring
//! propagation, pruned propagation, relation-graph lifting, fuzzy-set query
//! execution, embedding scorers and ranking metrics.

pub mod embed;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod prune;
pub mod query;
pub mod relgraph;
pub mod semiring;

pub use error::{Error, Result};
pub use graph::{
    Duplicates, EntityId, GraphPair, KnowledgeGraph, LoadOptions, RelationId, Triplet, Vocab,
};
pub use semiring::{
    Iterations, NaturalOrder, PathMethod, PropagationState, Semiring, StandardSemiring,
};
