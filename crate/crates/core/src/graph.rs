//! Multi-relational graph storage.
//!
//! Triplets are stored once in insertion order and indexed three ways with
//! compressed (CSR-style) slices of edge ids: by tail (incoming view), by
//! head (outgoing view) and by relation. Every algorithm in the crate goes
//! through these views.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triplet {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Triplet {
            head: EntityId(head),
            relation: RelationId(relation),
            tail: EntityId(tail),
        }
    }
}

/// Bidirectional name <-> dense id map. Ids follow first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab::new();
        for name in names {
            let name = name.into();
            if vocab.lookup.contains_key(&name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate vocabulary name `{name}`"
                )));
            }
            vocab.intern(&name);
        }
        Ok(vocab)
    }

    /// Vocabulary `0..n` with names equal to the decimal id.
    pub fn numbered(n: usize) -> Self {
        let mut vocab = Vocab::new();
        for i in 0..n {
            vocab.intern(&i.to_string());
        }
        vocab
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Sidecar format: one `name<TAB>id` line per entry, in id order.
    pub fn write_sidecar<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (id, name) in self.names.iter().enumerate() {
            writeln!(out, "{name}\t{id}")?;
        }
        Ok(())
    }

    pub fn read_sidecar<R: BufRead>(reader: R) -> Result<Self> {
        let mut names: Vec<Option<String>> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io("<vocab>", e))?;
            if line.is_empty() {
                continue;
            }
            let (name, id) = line.rsplit_once('\t').ok_or_else(|| Error::Malformed {
                line: line_no,
                reason: "expected `name<TAB>id`".into(),
            })?;
            let id: usize = id.parse().map_err(|_| Error::Malformed {
                line: line_no,
                reason: format!("bad id `{id}`"),
            })?;
            if names.len() <= id {
                names.resize(id + 1, None);
            }
            if names[id].replace(name.to_string()).is_some() {
                return Err(Error::Malformed {
                    line: line_no,
                    reason: format!("id {id} assigned twice"),
                });
            }
        }
        let names: Option<Vec<String>> = names.into_iter().collect();
        let names = names.ok_or_else(|| Error::Malformed {
            line: 0,
            reason: "vocabulary ids are not contiguous".into(),
        })?;
        Vocab::from_names(names)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    edges: Vec<usize>,
}

impl Csr {
    /// Stable counting sort of edge ids by `key`, so each slice keeps
    /// insertion order.
    fn build(rows: usize, keys: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        for k in keys.clone() {
            offsets[k + 1] += 1;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![0usize; offsets[rows]];
        for (e, k) in keys.enumerate() {
            edges[cursor[k]] = e;
            cursor[k] += 1;
        }
        Csr { offsets, edges }
    }

    #[inline]
    fn row(&self, i: usize) -> &[usize] {
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Duplicates {
    /// Treat the edge list as a set (first occurrence wins).
    #[default]
    Deduplicate,
    /// Keep repeated triplets as parallel edges.
    Keep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Accept an optional fourth weight column.
    pub weighted: bool,
    pub duplicates: Duplicates,
}

/// Immutable multi-relational graph.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    triplets: Vec<Triplet>,
    weights: Option<Vec<f64>>,
    incoming: Csr,
    outgoing: Csr,
    by_relation: Csr,
    duplicates: Duplicates,
    /// Relation count before each `add_inverses` call, oldest first.
    inverse_layers: Vec<usize>,
}

impl KnowledgeGraph {
    pub fn new(
        entities: Vocab,
        relations: Vocab,
        triplets: Vec<Triplet>,
        weights: Option<Vec<f64>>,
        duplicates: Duplicates,
    ) -> Result<Self> {
        if let Some(w) = &weights {
            if w.len() != triplets.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} weights for {} triplets",
                    w.len(),
                    triplets.len()
                )));
            }
            if let Some(&bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "edge weight {bad} is not a finite nonnegative number"
                )));
            }
        }
        for t in &triplets {
            check_range("entity", t.head.index(), entities.len())?;
            check_range("entity", t.tail.index(), entities.len())?;
            check_range("relation", t.relation.index(), relations.len())?;
        }
        let (triplets, weights) = match duplicates {
            Duplicates::Keep => (triplets, weights),
            Duplicates::Deduplicate => dedup(triplets, weights),
        };
        Ok(Self::assemble(
            entities,
            relations,
            triplets,
            weights,
            duplicates,
            Vec::new(),
        ))
    }

    /// Unweighted, deduplicated graph over numbered vocabularies.
    pub fn from_triplets(
        entity_count: usize,
        relation_count: usize,
        triplets: Vec<Triplet>,
    ) -> Result<Self> {
        Self::new(
            Vocab::numbered(entity_count),
            Vocab::numbered(relation_count),
            triplets,
            None,
            Duplicates::Deduplicate,
        )
    }

    fn assemble(
        entities: Vocab,
        relations: Vocab,
        triplets: Vec<Triplet>,
        weights: Option<Vec<f64>>,
        duplicates: Duplicates,
        inverse_layers: Vec<usize>,
    ) -> Self {
        let n = entities.len();
        let incoming = Csr::build(n, triplets.iter().map(|t| t.tail.index()));
        let outgoing = Csr::build(n, triplets.iter().map(|t| t.head.index()));
        let by_relation = Csr::build(relations.len(), triplets.iter().map(|t| t.relation.index()));
        KnowledgeGraph {
            entities,
            relations,
            triplets,
            weights,
            incoming,
            outgoing,
            by_relation,
            duplicates,
            inverse_layers,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.triplets.len()
    }

    pub fn entities(&self) -> &Vocab {
        &self.entities
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    #[inline]
    pub fn edge(&self, e: usize) -> Triplet {
        self.triplets[e]
    }

    /// Edge weight, 1.0 when the graph is unweighted.
    #[inline]
    pub fn weight(&self, e: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[e])
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn duplicates(&self) -> Duplicates {
        self.duplicates
    }

    /// Ids of edges ending at `v`.
    #[inline]
    pub fn incoming(&self, v: EntityId) -> &[usize] {
        self.incoming.row(v.index())
    }

    /// Ids of edges starting at `u`.
    #[inline]
    pub fn outgoing(&self, u: EntityId) -> &[usize] {
        self.outgoing.row(u.index())
    }

    #[inline]
    pub fn with_relation(&self, r: RelationId) -> &[usize] {
        self.by_relation.row(r.index())
    }

    pub fn in_degree(&self, v: EntityId) -> usize {
        self.incoming(v).len()
    }

    pub fn out_degree(&self, u: EntityId) -> usize {
        self.outgoing(u).len()
    }

    pub fn contains(&self, t: &Triplet) -> bool {
        if t.head.index() >= self.entity_count() {
            return false;
        }
        self.outgoing(t.head)
            .iter()
            .any(|&e| self.triplets[e] == *t)
    }

    pub fn entity_id(&self, name: &str) -> Result<EntityId> {
        self.entities
            .get(name)
            .map(EntityId)
            .ok_or_else(|| Error::UnknownEntity(name.to_string()))
    }

    pub fn relation_id(&self, name: &str) -> Result<RelationId> {
        self.relations
            .get(name)
            .map(RelationId)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        check_range("entity", e.index(), self.entity_count())
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        check_range("relation", r.index(), self.relation_count())
    }

    /// Adds a flipped edge `(v, q + |R|, u)` for every edge `(u, q, v)`,
    /// copying its weight. Inverse relations are named `<name>^-1`.
    pub fn add_inverses(&self) -> KnowledgeGraph {
        let base = self.relation_count() as u32;
        let mut relations = self.relations.clone();
        for name in self.relations.names() {
            let mut inverse = format!("{name}^-1");
            while relations.get(&inverse).is_some() {
                inverse.push('\'');
            }
            relations.intern(&inverse);
        }
        let mut triplets = self.triplets.clone();
        triplets.extend(self.triplets.iter().map(|t| Triplet {
            head: t.tail,
            relation: RelationId(t.relation.0 + base),
            tail: t.head,
        }));
        let weights = self.weights.as_ref().map(|w| {
            let mut doubled = w.clone();
            doubled.extend_from_slice(w);
            doubled
        });
        let mut layers = self.inverse_layers.clone();
        layers.push(base as usize);
        Self::assemble(
            self.entities.clone(),
            relations,
            triplets,
            weights,
            self.duplicates,
            layers,
        )
    }

    /// Returns a copy without the given edges. When inverses were added the
    /// flipped counterparts are removed as well.
    pub fn remove_edges(&self, removed: &[Triplet]) -> Result<KnowledgeGraph> {
        for t in removed {
            if !self.contains(t) {
                return Err(Error::EdgeNotPresent {
                    head: t.head.index(),
                    relation: t.relation.index(),
                    tail: t.tail.index(),
                });
            }
        }
        let mut doomed: HashSet<Triplet> = removed.iter().copied().collect();
        loop {
            let mut grew = false;
            for &base in &self.inverse_layers {
                let flipped: Vec<Triplet> = doomed
                    .iter()
                    .filter_map(|t| flip(t, base as u32))
                    .collect();
                for f in flipped {
                    grew |= doomed.insert(f);
                }
            }
            if !grew {
                break;
            }
        }
        let keep: Vec<usize> = (0..self.edge_count())
            .filter(|&e| !doomed.contains(&self.triplets[e]))
            .collect();
        let triplets = keep.iter().map(|&e| self.triplets[e]).collect();
        let weights = self
            .weights
            .as_ref()
            .map(|w| keep.iter().map(|&e| w[e]).collect());
        Ok(Self::assemble(
            self.entities.clone(),
            self.relations.clone(),
            triplets,
            weights,
            self.duplicates,
            self.inverse_layers.clone(),
        ))
    }

    /// Writes `head<TAB>relation<TAB>tail[<TAB>weight]` lines using names.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (e, t) in self.triplets.iter().enumerate() {
            let h = self.entities.name(t.head.0);
            let r = self.relations.name(t.relation.0);
            let tl = self.entities.name(t.tail.0);
            match &self.weights {
                Some(w) => writeln!(out, "{h}\t{r}\t{tl}\t{}", w[e])?,
                None => writeln!(out, "{h}\t{r}\t{tl}")?,
            }
        }
        Ok(())
    }
}

fn flip(t: &Triplet, base: u32) -> Option<Triplet> {
    let r = t.relation.0;
    let relation = if r < base {
        r + base
    } else if r < 2 * base {
        r - base
    } else {
        return None;
    };
    Some(Triplet {
        head: t.tail,
        relation: RelationId(relation),
        tail: t.head,
    })
}

fn check_range(kind: &'static str, id: usize, count: usize) -> Result<()> {
    if id < count {
        Ok(())
    } else {
        Err(Error::IdOutOfRange { kind, id, count })
    }
}

fn dedup(triplets: Vec<Triplet>, weights: Option<Vec<f64>>) -> (Vec<Triplet>, Option<Vec<f64>>) {
    let mut seen = HashSet::with_capacity(triplets.len());
    let mut kept_t = Vec::with_capacity(triplets.len());
    let mut kept_w = weights.as_ref().map(|_| Vec::with_capacity(triplets.len()));
    for (e, t) in triplets.into_iter().enumerate() {
        if seen.insert(t) {
            kept_t.push(t);
            if let (Some(out), Some(w)) = (kept_w.as_mut(), weights.as_ref()) {
                out.push(w[e]);
            }
        }
    }
    (kept_t, kept_w)
}

/// One parsed TSV row, names unresolved.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTriplet {
    pub line: usize,
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub weight: Option<f64>,
}

/// Parses triplet lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_tsv<R: BufRead>(reader: R, weighted: bool) -> Result<Vec<RawTriplet>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<tsv>", e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let max_fields = if weighted { 4 } else { 3 };
        if fields.len() < 3 || fields.len() > max_fields {
            return Err(Error::Malformed {
                line: line_no,
                reason: format!(
                    "expected {} tab-separated fields, found {}",
                    if weighted { "3 or 4" } else { "3" },
                    fields.len()
                ),
            });
        }
        if fields[..3].iter().any(|f| f.is_empty()) {
            return Err(Error::Malformed {
                line: line_no,
                reason: "empty field".into(),
            });
        }
        let weight = match fields.get(3) {
            Some(raw) => {
                let w: f64 = raw.trim().parse().map_err(|_| Error::Malformed {
                    line: line_no,
                    reason: format!("bad weight `{raw}`"),
                })?;
                if w < 0.0 {
                    return Err(Error::NegativeWeight {
                        line: line_no,
                        weight: w,
                    });
                }
                if !w.is_finite() {
                    return Err(Error::Malformed {
                        line: line_no,
                        reason: format!("non-finite weight `{raw}`"),
                    });
                }
                Some(w)
            }
            None => None,
        };
        rows.push(RawTriplet {
            line: line_no,
            head: fields[0].to_string(),
            relation: fields[1].to_string(),
            tail: fields[2].to_string(),
            weight,
        });
    }
    Ok(rows)
}

/// Resolves raw rows against (and extends) shared vocabularies.
pub fn build_graph(
    rows: &[RawTriplet],
    entities: &mut Vocab,
    relations: &mut Vocab,
    opts: LoadOptions,
) -> Result<KnowledgeGraph> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let triplets: Vec<Triplet> = rows
        .iter()
        .map(|row| Triplet {
            head: EntityId(entities.intern(&row.head)),
            relation: RelationId(relations.intern(&row.relation)),
            tail: EntityId(entities.intern(&row.tail)),
        })
        .collect();
    let weights = opts
        .weighted
        .then(|| rows.iter().map(|r| r.weight.unwrap_or(1.0)).collect());
    KnowledgeGraph::new(
        entities.clone(),
        relations.clone(),
        triplets,
        weights,
        opts.duplicates,
    )
}

pub fn read_tsv<R: BufRead>(reader: R, opts: LoadOptions) -> Result<KnowledgeGraph> {
    let rows = parse_tsv(reader, opts.weighted)?;
    build_graph(&rows, &mut Vocab::new(), &mut Vocab::new(), opts)
}

pub fn load_tsv(path: impl AsRef<Path>, opts: LoadOptions) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tsv(BufReader::new(file), opts)
}

pub fn save_tsv(graph: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    graph.write_tsv(&mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Observed graph and its completion over one vocabulary.
#[derive(Clone, Debug)]
pub struct GraphPair {
    pub train: KnowledgeGraph,
    pub full: KnowledgeGraph,
}

impl GraphPair {
    pub fn new(train: KnowledgeGraph, full: KnowledgeGraph) -> Result<Self> {
        if train.entities != full.entities || train.relations != full.relations {
            return Err(Error::PairMismatch("vocabularies differ".into()));
        }
        if let Some(t) = train.triplets.iter().find(|t| !full.contains(t)) {
            return Err(Error::PairMismatch(format!(
                "train edge ({}, {}, {}) missing from full graph",
                t.head.0, t.relation.0, t.tail.0
            )));
        }
        Ok(GraphPair { train, full })
    }

    /// Builds the pair by hiding `held_out` edges of `full`.
    pub fn by_removal(full: KnowledgeGraph, held_out: &[Triplet]) -> Result<Self> {
        let train = full.remove_edges(held_out)?;
        Ok(GraphPair { train, full })
    }

    /// Loads both files into one vocabulary (full graph names first).
    pub fn load(
        train_path: impl AsRef<Path>,
        full_path: impl AsRef<Path>,
        opts: LoadOptions,
    ) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<RawTriplet>> {
            let file = File::open(p).map_err(|e| Error::io(p, e))?;
            parse_tsv(BufReader::new(file), opts.weighted)
        };
        let full_rows = read(full_path.as_ref())?;
        let train_rows = read(train_path.as_ref())?;
        let mut entities = Vocab::new();
        let mut relations = Vocab::new();
        for row in full_rows.iter().chain(&train_rows) {
            entities.intern(&row.head);
            entities.intern(&row.tail);
            relations.intern(&row.relation);
        }
        let full = build_graph(&full_rows, &mut entities, &mut relations, opts)?;
        let train = build_graph(&train_rows, &mut entities, &mut relations, opts)?;
        Self::new(train, full)
    }
}
