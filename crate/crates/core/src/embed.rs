//! Knowledge-graph embedding score functions and their relation-pattern
//! identities.
//!
//! Complex vectors are stored as interleaved `(re, im)` pairs, quaternions as
//! consecutive 4-tuples `(a, b, c, d)`. SimplE entity rows hold the head-role
//! half followed by the tail-role half; its relation rows hold `r` followed by
//! the inverse relation.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, Triplet};
use crate::metrics::{filtered_rank, LinkPredictionReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Real,
    Complex,
    Quaternion,
    PairedReal,
}

impl Domain {
    /// Stored floats per embedding dimension.
    pub fn width(self) -> usize {
        match self {
            Domain::Real => 1,
            Domain::Complex | Domain::PairedReal => 2,
            Domain::Quaternion => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scorer {
    TransE,
    DistMult,
    ComplEx,
    SimplE,
    RotatE,
    QuatE,
}

impl Scorer {
    pub const ALL: [Scorer; 6] = [
        Scorer::TransE,
        Scorer::DistMult,
        Scorer::ComplEx,
        Scorer::SimplE,
        Scorer::RotatE,
        Scorer::QuatE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::TransE => "transe",
            Scorer::DistMult => "distmult",
            Scorer::ComplEx => "complex",
            Scorer::SimplE => "simple",
            Scorer::RotatE => "rotate",
            Scorer::QuatE => "quate",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Scorer::TransE | Scorer::DistMult => Domain::Real,
            Scorer::ComplEx | Scorer::RotatE => Domain::Complex,
            Scorer::SimplE => Domain::PairedReal,
            Scorer::QuatE => Domain::Quaternion,
        }
    }

    /// Scores raw rows of matching width. Callers guarantee the widths.
    fn eval(self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self {
            Scorer::TransE => -h
                .iter()
                .zip(r)
                .zip(t)
                .map(|((h, r), t)| (h + r - t) * (h + r - t))
                .sum::<f64>()
                .sqrt(),
            Scorer::DistMult => h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum(),
            Scorer::ComplEx => complex_iter(h, r, t)
                .map(|((hr, hi), (rr, ri), (tr, ti))| {
                    // Re(h * r * conj(t))
                    let (pr, pi) = (hr * rr - hi * ri, hr * ri + hi * rr);
                    pr * tr + pi * ti
                })
                .sum(),
            Scorer::SimplE => {
                let d = h.len() / 2;
                let flipped: Vec<f64> = t[d..].iter().chain(&t[..d]).copied().collect();
                Scorer::DistMult.eval(h, r, &flipped)
            }
            Scorer::RotatE => -complex_iter(h, r, t)
                .map(|((hr, hi), (rr, ri), (tr, ti))| {
                    let (dr, di) = (hr * rr - hi * ri - tr, hr * ri + hi * rr - ti);
                    dr * dr + di * di
                })
                .sum::<f64>()
                .sqrt(),
            Scorer::QuatE => h
                .chunks_exact(4)
                .zip(r.chunks_exact(4))
                .zip(t.chunks_exact(4))
                .map(|((h, r), t)| {
                    let rn = normalize(quat(r));
                    let p = hamilton(quat(h), rn);
                    p.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
                })
                .sum(),
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scorer::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scorer `{s}`")))
    }
}

type C = (f64, f64);

fn complex_iter<'a>(h: &'a [f64], r: &'a [f64], t: &'a [f64]) -> impl Iterator<Item = (C, C, C)> + 'a {
    h.chunks_exact(2)
        .zip(r.chunks_exact(2))
        .zip(t.chunks_exact(2))
        .map(|((h, r), t)| ((h[0], h[1]), (r[0], r[1]), (t[0], t[1])))
}

pub type Quaternion = [f64; 4];

fn quat(s: &[f64]) -> Quaternion {
    [s[0], s[1], s[2], s[3]]
}

pub fn hamilton(p: Quaternion, q: Quaternion) -> Quaternion {
    let [a1, b1, c1, d1] = p;
    let [a2, b2, c2, d2] = q;
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

fn normalize(q: Quaternion) -> Quaternion {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return q;
    }
    q.map(|x| x / n)
}

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub dimension: usize,
    pub domain: Domain,
    pub entities: usize,
    pub relations: usize,
    pub encoding: Encoding,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Tsv,
    Binary,
}

/// Entity and relation vectors for one scorer family.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    domain: Domain,
    entity_count: usize,
    relation_count: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(
        domain: Domain,
        dimension: usize,
        entity_count: usize,
        relation_count: usize,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::TableMismatch("dimension must be positive".into()));
        }
        let w = dimension * domain.width();
        if entities.len() != entity_count * w || relations.len() != relation_count * w {
            return Err(Error::TableMismatch(format!(
                "expected {} entity and {} relation values, got {} and {}",
                entity_count * w,
                relation_count * w,
                entities.len(),
                relations.len()
            )));
        }
        if entities.iter().chain(&relations).any(|x| !x.is_finite()) {
            return Err(Error::TableMismatch("non-finite embedding value".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            domain,
            entity_count,
            relation_count,
            entities,
            relations,
        })
    }

    /// Seeded uniform draws in `[-1, 1]`; RotatE relations are unit-modulus
    /// rotations from uniform phases.
    pub fn random(
        scorer: Scorer,
        dimension: usize,
        entity_count: usize,
        relation_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let domain = scorer.domain();
        let w = dimension * domain.width();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entities = (0..entity_count * w).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let relations = match scorer {
            Scorer::RotatE => (0..relation_count * dimension)
                .flat_map(|_| {
                    let phase: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    [phase.cos(), phase.sin()]
                })
                .collect(),
            _ => (0..relation_count * w).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        };
        Self::new(domain, dimension, entity_count, relation_count, entities, relations)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    fn width(&self) -> usize {
        self.dimension * self.domain.width()
    }

    pub fn entity(&self, e: usize) -> &[f64] {
        let w = self.width();
        &self.entities[e * w..(e + 1) * w]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.relations[r * w..(r + 1) * w]
    }

    pub fn header(&self, encoding: Encoding) -> TableHeader {
        TableHeader {
            dimension: self.dimension,
            domain: self.domain,
            entities: self.entity_count,
            relations: self.relation_count,
            encoding,
        }
    }

    /// Checks the table can be used with `scorer`.
    pub fn check(&self, scorer: Scorer) -> Result<()> {
        if self.domain != scorer.domain() {
            return Err(Error::TableMismatch(format!(
                "{scorer} needs a {:?} table, got {:?}",
                scorer.domain(),
                self.domain
            )));
        }
        if scorer == Scorer::RotatE {
            for (i, c) in self.relations.chunks_exact(2).enumerate() {
                let m = (c[0] * c[0] + c[1] * c[1]).sqrt();
                if (m - 1.0).abs() > UNIT_TOLERANCE {
                    return Err(Error::TableMismatch(format!(
                        "rotate relation {} component {} has modulus {m}",
                        i / self.dimension,
                        i % self.dimension
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W, encoding: Encoding) -> Result<()> {
        let io = |e| Error::io("<output>", e);
        serde_json::to_writer(&mut out, &self.header(encoding))?;
        writeln!(out).map_err(io)?;
        match encoding {
            Encoding::Tsv => {
                let w = self.width();
                for row in self.entities.chunks(w).chain(self.relations.chunks(w)) {
                    let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                    writeln!(out, "{}", line.join("\t")).map_err(io)?;
                }
            }
            Encoding::Binary => {
                for x in self.entities.iter().chain(&self.relations) {
                    out.write_all(&x.to_le_bytes()).map_err(io)?;
                }
            }
        }
        out.flush().map_err(io)
    }

    pub fn read<R: BufRead>(mut input: R) -> Result<Self> {
        let io = |e| Error::io("<input>", e);
        let mut first = String::new();
        input.read_line(&mut first).map_err(io)?;
        let header: TableHeader = serde_json::from_str(first.trim()).map_err(|e| Error::Malformed {
            line: 1,
            reason: format!("bad table header: {e}"),
        })?;
        let w = header.dimension * header.domain.width();
        let total = (header.entities + header.relations) * w;
        let values = match header.encoding {
            Encoding::Tsv => {
                let mut values = Vec::with_capacity(total);
                for (i, line) in input.lines().enumerate() {
                    let line = line.map_err(io)?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let row: Vec<f64> = line
                        .split('\t')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Malformed {
                            line: i + 2,
                            reason: format!("bad number: {e}"),
                        })?;
                    if row.len() != w {
                        return Err(Error::Malformed {
                            line: i + 2,
                            reason: format!("expected {w} values, found {}", row.len()),
                        });
                    }
                    values.extend(row);
                }
                values
            }
            Encoding::Binary => {
                let mut bytes = Vec::new();
                input.read_to_end(&mut bytes).map_err(io)?;
                if bytes.len() % 8 != 0 {
                    return Err(Error::TableMismatch("binary payload is not whole f64s".into()));
                }
                bytes
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect()
            }
        };
        if values.len() != total {
            return Err(Error::TableMismatch(format!(
                "header promises {total} values, file holds {}",
                values.len()
            )));
        }
        let split = header.entities * w;
        let mut entities = values;
        let relations = entities.split_off(split);
        Self::new(
            header.domain,
            header.dimension,
            header.entities,
            header.relations,
            entities,
            relations,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file), encoding)
    }
}

pub fn score(scorer: Scorer, table: &EmbeddingTable, t: &Triplet) -> Result<f64> {
    table.check(scorer)?;
    score_unchecked(scorer, table, t)
}

fn score_unchecked(scorer: Scorer, table: &EmbeddingTable, t: &Triplet) -> Result<f64> {
    let (h, r, tl) = (t.head.index(), t.relation.index(), t.tail.index());
    for (kind, id, count) in [
        ("entity", h, table.entity_count),
        ("relation", r, table.relation_count),
        ("entity", tl, table.entity_count),
    ] {
        if id >= count {
            return Err(Error::IdOutOfRange { kind, id, count });
        }
    }
    Ok(scorer.eval(table.entity(h), table.relation(r), table.entity(tl)))
}

/// Scores every listed triplet in parallel, preserving input order.
pub fn score_all(scorer: Scorer, table: &EmbeddingTable, triplets: &[Triplet]) -> Result<Vec<f64>> {
    table.check(scorer)?;
    triplets
        .par_iter()
        .map(|t| score_unchecked(scorer, table, t))
        .collect()
}

/// Filtered head and tail ranks of each test triplet against every entity;
/// candidates forming a triplet of `known` are filtered.
pub fn link_prediction(
    scorer: Scorer,
    table: &EmbeddingTable,
    test: &[Triplet],
    known: &KnowledgeGraph,
    ks: &[usize],
) -> Result<(Vec<(f64, f64)>, LinkPredictionReport)> {
    table.check(scorer)?;
    if known.entity_count() != table.entity_count() || known.relation_count() != table.relation_count() {
        return Err(Error::TableMismatch(format!(
            "table covers {} entities and {} relations, graph has {} and {}",
            table.entity_count(),
            table.relation_count(),
            known.entity_count(),
            known.relation_count()
        )));
    }
    let ranks: Vec<(f64, f64)> = test
        .par_iter()
        .map(|t| {
            let n = table.entity_count();
            let r = table.relation(t.relation.index());
            let tails: Vec<f64> = (0..n)
                .map(|v| scorer.eval(table.entity(t.head.index()), r, table.entity(v)))
                .collect();
            let heads: Vec<f64> = (0..n)
                .map(|u| scorer.eval(table.entity(u), r, table.entity(t.tail.index())))
                .collect();
            let known_tails: Vec<usize> = known
                .outgoing(t.head)
                .iter()
                .map(|&e| known.edge(e))
                .filter(|k| k.relation == t.relation)
                .map(|k| k.tail.index())
                .collect();
            let known_heads: Vec<usize> = known
                .incoming(t.tail)
                .iter()
                .map(|&e| known.edge(e))
                .filter(|k| k.relation == t.relation)
                .map(|k| k.head.index())
                .collect();
            Ok((
                filtered_rank(&heads, t.head.index(), &known_heads)?,
                filtered_rank(&tails, t.tail.index(), &known_tails)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (h, t): (Vec<f64>, Vec<f64>) = ranks.iter().copied().unzip();
    let report = LinkPredictionReport::new(&h, &t, ks)?;
    Ok((ranks, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Symmetry,
    Inversion,
    Composition,
    Noncommutativity,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::Symmetry,
        Pattern::Inversion,
        Pattern::Composition,
        Pattern::Noncommutativity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Symmetry => "symmetry",
            Pattern::Inversion => "inversion",
            Pattern::Composition => "composition",
            Pattern::Noncommutativity => "noncommutativity",
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pattern `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub scorer: Scorer,
    pub pattern: Pattern,
    pub samples: usize,
    pub tolerance: f64,
    /// Largest deviation between the two sides of the identity.
    pub max_error: f64,
    /// For existential patterns: 1-based draw that produced the witness.
    pub witness_at: Option<usize>,
    pub passed: bool,
}

pub fn supports(scorer: Scorer, pattern: Pattern) -> bool {
    matches!(
        (scorer, pattern),
        (Scorer::DistMult, Pattern::Symmetry)
            | (Scorer::TransE, Pattern::Inversion)
            | (Scorer::TransE, Pattern::Composition)
            | (Scorer::ComplEx, Pattern::Inversion)
            | (Scorer::RotatE, Pattern::Inversion)
            | (Scorer::RotatE, Pattern::Composition)
            | (Scorer::QuatE, Pattern::Noncommutativity)
    )
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn phases(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

fn rotation(ph: &[f64]) -> Vec<f64> {
    ph.iter().flat_map(|p| [p.cos(), p.sin()]).collect()
}

fn conj(z: &[f64]) -> Vec<f64> {
    z.chunks_exact(2).flat_map(|c| [c[0], -c[1]]).collect()
}

fn hadamard_complex(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.chunks_exact(2)
        .zip(b.chunks_exact(2))
        .flat_map(|(x, y)| [x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0]])
        .collect()
}

/// Draws `samples` random embeddings of `dimension` and checks the
/// identity behind `pattern`, or searches for a witness when the pattern is
/// existential.
pub fn pattern_check(
    scorer: Scorer,
    pattern: Pattern,
    dimension: usize,
    samples: usize,
    tolerance: f64,
    seed: u64,
) -> Result<PatternReport> {
    if !supports(scorer, pattern) {
        return Err(Error::UnsupportedPattern {
            scorer: scorer.to_string(),
            pattern: pattern.as_str().into(),
        });
    }
    if dimension == 0 || samples == 0 {
        return Err(Error::InvalidParameter("dimension and samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = dimension * scorer.domain().width();
    let mut max_error: f64 = 0.0;
    let mut witness_at = None;
    for draw in 1..=samples {
        let h = uniform(&mut rng, w);
        let t = uniform(&mut rng, w);
        let (lhs, rhs) = match (scorer, pattern) {
            (Scorer::DistMult, Pattern::Symmetry) => {
                let r = uniform(&mut rng, w);
                (scorer.eval(&h, &r, &t), scorer.eval(&t, &r, &h))
            }
            (Scorer::TransE, Pattern::Inversion) => {
                let r1 = uniform(&mut rng, w);
                let r2: Vec<f64> = r1.iter().map(|x| -x).collect();
                (scorer.eval(&h, &r1, &t), scorer.eval(&t, &r2, &h))
            }
            (Scorer::TransE, Pattern::Composition) => {
                let (r1, r2) = (uniform(&mut rng, w), uniform(&mut rng, w));
                let r3: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
                let mid: Vec<f64> = h.iter().zip(&r1).map(|(a, b)| a + b).collect();
                (scorer.eval(&mid, &r2, &t), scorer.eval(&h, &r3, &t))
            }
            (Scorer::ComplEx, Pattern::Inversion) => {
                let r1 = uniform(&mut rng, w);
                (scorer.eval(&h, &r1, &t), scorer.eval(&t, &conj(&r1), &h))
            }
            (Scorer::RotatE, Pattern::Inversion) => {
                let r1 = rotation(&phases(&mut rng, dimension));
                (scorer.eval(&h, &r1, &t), scorer.eval(&t, &conj(&r1), &h))
            }
            (Scorer::RotatE, Pattern::Composition) => {
                let (p1, p2) = (phases(&mut rng, dimension), phases(&mut rng, dimension));
                let p3: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
                let (r1, r2, r3) = (rotation(&p1), rotation(&p2), rotation(&p3));
                let mid = hadamard_complex(&h, &r1);
                (scorer.eval(&mid, &r2, &t), scorer.eval(&h, &r3, &t))
            }
            (Scorer::QuatE, Pattern::Noncommutativity) => {
                let p = normalize(quat(&uniform(&mut rng, 4)));
                let q = normalize(quat(&uniform(&mut rng, 4)));
                let (pq, qp) = (hamilton(p, q), hamilton(q, p));
                let gap = pq
                    .iter()
                    .zip(&qp)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if gap > tolerance {
                    witness_at = Some(draw);
                    return Ok(PatternReport {
                        scorer,
                        pattern,
                        samples: draw,
                        tolerance,
                        max_error: gap,
                        witness_at,
                        passed: true,
                    });
                }
                continue;
            }
            _ => unreachable!("filtered by supports"),
        };
        max_error = max_error.max((lhs - rhs).abs());
    }
    let passed = match pattern {
        Pattern::Noncommutativity => witness_at.is_some(),
        _ => max_error <= tolerance,
    };
    Ok(PatternReport {
        scorer,
        pattern,
        samples,
        tolerance,
        max_error,
        witness_at,
        passed,
    })
}
