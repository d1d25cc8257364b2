//! First-order queries over fuzzy entity sets.
//!
//! Queries are trees of projections, conjunctions, disjunctions and
//! negations rooted at anchor entities. They compile to postfix programs
//! executed on a stack of [`FuzzySet`]s with product fuzzy logic; with
//! boolean anchors the result is exactly the subgraph-matching answer set.

mod expr;
mod fuzzy;
mod parse;
mod program;
mod sample;
mod shape;

pub use expr::QueryExpr;
pub use fuzzy::{inverse_project, project, FuzzySet, ProjectionMode};
pub use parse::{parse, parse_lines};
pub use program::{compile, execute, execute_batch, Instruction, QueryProgram};
pub use sample::{boolean_answers, sample_queries, QueryRecord, QuerySample, SampleOptions};
pub use shape::{from_betae, QueryType, Shape};

/// Default membership threshold for counting answers.
pub const DEFAULT_TAU: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::graph::{EntityId, KnowledgeGraph, RelationId, Triplet, Vocab};
    use crate::graph::Duplicates;

    fn named() -> KnowledgeGraph {
        let entities =
            Vocab::from_names(["Hinton", "Bengio", "TuringAward", "DeepLearning", "Toronto", "Montreal", "my city"])
                .unwrap();
        let relations = Vocab::from_names(["Win", "Field", "University"]).unwrap();
        let t = |h, r, t| Triplet::new(h, r, t);
        KnowledgeGraph::new(
            entities,
            relations,
            vec![t(0, 0, 2), t(1, 0, 2), t(0, 1, 3), t(1, 1, 3), t(0, 2, 4), t(1, 2, 5)],
            None,
            Duplicates::Deduplicate,
        )
        .unwrap()
    }

    #[test]
    fn parses_nested_example() {
        let g = named();
        let e = parse(
            "(p University (and (ip Win {TuringAward}) (ip Field {DeepLearning})))",
            &g,
        )
        .unwrap();
        let expected = QueryExpr::project(
            2,
            QueryExpr::and(
                QueryExpr::inverse_project(0, QueryExpr::anchor(2)),
                QueryExpr::inverse_project(1, QueryExpr::anchor(3)),
            ),
        );
        assert_eq!(e, expected);
        let x = execute(&g, &compile(&e).unwrap(), ProjectionMode::NoisyOr).unwrap();
        assert_eq!(x.members(DEFAULT_TAU), vec![EntityId(4), EntityId(5)]);
        assert_eq!(x.cardinality(DEFAULT_TAU).unwrap(), 2);
    }

    #[test]
    fn simple_projection_parses() {
        let g = KnowledgeGraph::from_triplets(1, 1, vec![]).unwrap();
        assert_eq!(
            parse("(p 0 {0})", &g).unwrap(),
            QueryExpr::Project(RelationId(0), Box::new(QueryExpr::Anchor(vec![EntityId(0)])))
        );
    }

    #[test]
    fn arity_and_syntax_errors() {
        let g = named();
        assert!(matches!(parse("(and {Hinton})", &g), Err(Error::Syntax { position: 0, .. })));
        assert!(matches!(parse("(p Win {Hinton}", &g), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(p Win {Hinton}) x", &g), Err(Error::Syntax { position: 17, .. })));
        assert!(matches!(parse("(q Win {Hinton})", &g), Err(Error::Syntax { position: 1, .. })));
        assert!(matches!(parse("(p Win {})", &g), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(p Lose {Hinton})", &g), Err(Error::UnknownRelation(_))));
        assert!(matches!(parse("(p Win {Turing})", &g), Err(Error::UnknownEntity(_))));
        assert!(matches!(parse("(not (p Win {Hinton}))", &g), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn quoted_names_roundtrip() {
        let g = named();
        let e = parse("(ip University {\"my city\" Toronto})", &g).unwrap();
        let text = e.to_sexpr(&g);
        assert_eq!(text, "(ip University {\"my city\" Toronto})");
        assert_eq!(parse(&text, &g).unwrap(), e);
    }

    #[test]
    fn projection_modes_on_parallel_edges() {
        let g = KnowledgeGraph::new(
            Vocab::numbered(2),
            Vocab::numbered(1),
            vec![Triplet::new(0, 0, 1), Triplet::new(0, 0, 1)],
            None,
            Duplicates::Keep,
        )
        .unwrap();
        let x = FuzzySet::new(vec![0.5, 0.0]).unwrap();
        let noisy = project(&g, &x, RelationId(0), ProjectionMode::NoisyOr).unwrap();
        let max = project(&g, &x, RelationId(0), ProjectionMode::Max).unwrap();
        assert_eq!(noisy.values(), &[0.0, 0.75]);
        assert_eq!(max.values(), &[0.0, 0.5]);
    }

    #[test]
    fn fuzzy_identities() {
        let x = FuzzySet::new(vec![0.0, 0.3, 1.0]).unwrap();
        assert_eq!(x.conj(&FuzzySet::ones(3)).unwrap(), x);
        assert_eq!(x.disj(&FuzzySet::zeros(3)).unwrap(), x);
        let back = x.neg().unwrap().neg().unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(FuzzySet::new(vec![1.5]).is_err());
        assert!(x.conj(&FuzzySet::ones(2)).is_err());
    }

    #[test]
    fn cardinality_is_strict() {
        let x = FuzzySet::new(vec![0.5; 4]).unwrap();
        assert_eq!(x.cardinality(0.5).unwrap(), 0);
        assert_eq!(FuzzySet::ones(3).cardinality(0.5).unwrap(), 3);
        assert!(x.cardinality(1.5).is_err());
    }
}
