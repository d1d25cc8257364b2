use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use kgreason::embed::{self, EmbeddingTable, Encoding, Pattern, Scorer};
use kgreason::graph::{load_tsv, parse_tsv};
use kgreason::metrics::{self, RankingReport, ScoredQuery};
use kgreason::prune::{pruned_run, PriorityFunction, PruneConfig};
use kgreason::query::{self, ProjectionMode, QueryExpr, QueryRecord, QueryType, SampleOptions};
use kgreason::relgraph::{self, CountMode};
use kgreason::semiring::score_pairs;
use kgreason::{
    Duplicates, EntityId, Error, GraphPair, Iterations, KnowledgeGraph, LoadOptions, PathMethod,
    Semiring, Triplet,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{config, emit, json_document, num, tsv_header, write_sidecars};
use crate::usage;

#[derive(Args, Serialize, Clone, Copy)]
pub struct LoadFlags {
    /// Read an optional fourth column of non-negative edge weights.
    #[arg(long)]
    pub weighted: bool,
    /// Keep repeated triplets as parallel edges instead of deduplicating.
    #[arg(long)]
    pub keep_duplicates: bool,
}

impl LoadFlags {
    fn options(self) -> LoadOptions {
        LoadOptions {
            weighted: self.weighted,
            duplicates: if self.keep_duplicates {
                Duplicates::Keep
            } else {
                Duplicates::Deduplicate
            },
        }
    }
}

#[derive(Args, Serialize)]
pub struct GraphInput {
    /// Triplet TSV: head, relation, tail[, weight].
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub load: LoadFlags,
}

impl GraphInput {
    fn load(&self) -> Result<KnowledgeGraph> {
        Ok(load_tsv(&self.graph, self.load.options())?)
    }
}

#[derive(Args, Serialize)]
pub struct OutputFlag {
    /// Output file (default: stdout).
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl OutputFlag {
    fn path(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Katz index, sum-product.
    Katz,
    /// Personalized PageRank, sum-product.
    Ppr,
    /// Shortest distance, min-plus.
    Distance,
    /// Widest path, max-min.
    Widest,
    /// Most reliable path, max-product.
    Reliable,
}

#[derive(Args, Serialize)]
pub struct MethodFlags {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Katz attenuation factor.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// PPR continuation probability.
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    /// Number of propagation rounds.
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Stop early once an iteration changes no value by more than this.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl MethodFlags {
    fn method(&self) -> PathMethod {
        match self.method {
            MethodArg::Katz => PathMethod::Katz { beta: self.beta },
            MethodArg::Ppr => PathMethod::Ppr { alpha: self.alpha },
            MethodArg::Distance => PathMethod::Distance,
            MethodArg::Widest => PathMethod::Widest,
            MethodArg::Reliable => PathMethod::Reliable,
        }
    }

    fn iterations(&self) -> Iterations {
        Iterations {
            max: self.iters,
            tol: self.tol,
        }
    }
}

// ---------------------------------------------------------------- paths

#[derive(Args, Serialize)]
pub struct PathsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub method: MethodFlags,
    /// Comma-separated source entity names (default: every entity).
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

fn resolve_entities(g: &KnowledgeGraph, names: &[String]) -> Result<Vec<EntityId>> {
    Ok(names
        .iter()
        .map(|n| g.entity_id(n))
        .collect::<kgreason::Result<_>>()?)
}

fn all_entities(g: &KnowledgeGraph) -> Vec<EntityId> {
    (0..g.entity_count() as u32).map(EntityId).collect()
}

pub fn paths(a: &PathsArgs) -> Result<()> {
    let cfg = config("paths", a)?;
    let g = a.input.load()?;
    let method = a.method.method();
    let s = method.semiring();
    let values = method.edge_values(&g)?;
    let sources = match &a.sources {
        Some(names) => resolve_entities(&g, names)?,
        None => all_entities(&g),
    };
    let states = score_pairs(&g, &sources, &s, &values, a.method.iterations())?;
    let names = g.entities();
    let mut out = tsv_header(&cfg);
    for st in &states {
        for (v, &x) in st.values.iter().enumerate() {
            if x != s.zero() {
                let _ = writeln!(out, "{}\t{}\t{x}", names.name(st.source.0), names.name(v as u32));
            }
        }
    }
    emit(a.out.path(), &out)
}

// ---------------------------------------------------------------- prune

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorityArg {
    /// Current node value.
    Value,
    /// Personalized PageRank from the source.
    Ppr,
    /// Total degree.
    Degree,
    /// Seeded random keys, redrawn every iteration.
    Random,
}

#[derive(Args, Serialize)]
pub struct PruneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub method: MethodFlags,
    /// Source entity name.
    #[arg(long)]
    pub source: String,
    #[arg(long, value_enum, default_value = "value")]
    pub priority: PriorityArg,
    /// Seed for the random priority.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Continuation probability for the PPR priority.
    #[arg(long, default_value_t = 0.85)]
    pub ppr_alpha: f64,
    /// Power iterations for the PPR priority.
    #[arg(long, default_value_t = 20)]
    pub ppr_iters: usize,
    /// Node budget K per iteration (default: every node).
    #[arg(long, conflicts_with_all = ["node_ratio", "degree_ratio"])]
    pub nodes: Option<usize>,
    /// Edge budget L per iteration (default: unbounded).
    #[arg(long, conflicts_with_all = ["node_ratio", "degree_ratio"])]
    pub edges: Option<usize>,
    /// K as a fraction of |V|.
    #[arg(long)]
    pub node_ratio: Option<f64>,
    /// L as a multiple of K times the mean degree.
    #[arg(long, requires = "node_ratio")]
    pub degree_ratio: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

pub fn prune(a: &PruneArgs) -> Result<()> {
    let cfg = config("prune", a)?;
    let g = a.input.load()?;
    let method = a.method.method();
    let s = method.semiring();
    let values = method.edge_values(&g)?;
    let source = g.entity_id(&a.source)?;
    let priority = match a.priority {
        PriorityArg::Value => PriorityFunction::Value,
        PriorityArg::Ppr => PriorityFunction::ppr(&g, source, a.ppr_alpha, a.ppr_iters)?,
        PriorityArg::Degree => PriorityFunction::Degree,
        PriorityArg::Random => PriorityFunction::Random { seed: a.seed },
    };
    let budget = match a.node_ratio {
        Some(node_ratio) => PruneConfig::Ratio {
            node_ratio,
            degree_ratio: a.degree_ratio,
        },
        None => PruneConfig::Fixed {
            nodes: a.nodes.unwrap_or(g.entity_count()),
            edges: a.edges,
        },
    };
    let (state, trace) = pruned_run(
        &g,
        source,
        &s,
        &values,
        &priority,
        &budget,
        a.method.iterations(),
    )?;
    let names = g.entities();
    let kept: Vec<Value> = state
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != s.zero())
        .map(|(v, &x)| json!({"entity": names.name(v as u32), "value": num(x)}))
        .collect();
    let rounds: Vec<Value> = trace
        .iterations
        .iter()
        .enumerate()
        .map(|(i, it)| {
            json!({
                "iteration": i + 1,
                "nodes": it.selected.len(),
                "edges": it.edges.len(),
                "selected": it.selected.iter().map(|e| names.name(e.0)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let body = json!({
        "source": a.source,
        "method": method.name(),
        "semiring": s.name(),
        "iterations": state.iterations,
        "converged": state.converged,
        "values": kept,
        "trace": {
            "node_budget": trace.node_budget,
            "edge_budget": trace.edge_budget,
            "messages": trace.messages,
            "unpruned_messages": state.iterations * g.edge_count(),
            "iterations": rounds,
        },
    });
    emit(a.out.path(), &json_document(cfg, body)?)
}

// ---------------------------------------------------------------- lift

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountArg {
    /// Number of distinct shared entities.
    Entities,
    /// Number of co-incident edge pairs.
    EdgePairs,
}

#[derive(Args, Serialize)]
pub struct LiftArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
    /// Lift the graph as given instead of adding inverse relations first.
    #[arg(long)]
    pub no_inverses: bool,
    #[arg(long, value_enum, default_value = "entities")]
    pub count: CountArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

pub fn lift(a: &LiftArgs) -> Result<()> {
    let cfg = config("lift", a)?;
    let mut g = a.input.load()?;
    if !a.no_inverses {
        g = g.add_inverses();
    }
    let mode = match a.count {
        CountArg::Entities => CountMode::Entities,
        CountArg::EdgePairs => CountMode::EdgePairs,
    };
    let rg = relgraph::lift(&g, mode)?;
    let mut out = tsv_header(&cfg).into_bytes();
    rg.write_tsv(&mut out)?;
    emit(a.out.path(), &String::from_utf8(out)?)
}

// ---------------------------------------------------------------- query

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryFormat {
    /// Decide from the first character: `{` samples, `[` BetaE, else text.
    Auto,
    /// One s-expression per line.
    Sexpr,
    /// The JSON document written by `sample-queries`.
    Samples,
    /// A JSON array of BetaE-style nested tuples over entity/relation ids.
    Betae,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    NoisyOr,
    Max,
}

#[derive(Args, Serialize)]
pub struct QueryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
    /// Query file.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: QueryFormat,
    /// Projection aggregator.
    #[arg(long, value_enum, default_value = "noisy-or")]
    pub mode: ModeArg,
    /// Membership threshold for cardinality.
    #[arg(long, default_value_t = query::DEFAULT_TAU)]
    pub tau: f64,
    /// Keep only the best N answers per query.
    #[arg(long)]
    pub top: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

fn malformed(reason: impl Into<String>) -> anyhow::Error {
    Error::InvalidQuery(reason.into()).into()
}

fn read_queries(path: &Path, format: QueryFormat, g: &KnowledgeGraph) -> Result<Vec<QueryExpr>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let format = match format {
        QueryFormat::Auto => match text.trim_start().chars().next() {
            Some('{') => QueryFormat::Samples,
            Some('[') => QueryFormat::Betae,
            _ => QueryFormat::Sexpr,
        },
        f => f,
    };
    match format {
        QueryFormat::Samples => {
            let doc: Value = serde_json::from_str(&text)?;
            let list = doc["queries"]
                .as_array()
                .ok_or_else(|| malformed("samples document has no `queries` array"))?;
            list.iter()
                .enumerate()
                .map(|(i, r)| {
                    let q = r["query"]
                        .as_str()
                        .ok_or_else(|| malformed(format!("record {i} has no `query` string")))?;
                    Ok(query::parse(q, g)?)
                })
                .collect()
        }
        QueryFormat::Betae => {
            let doc: Value = serde_json::from_str(&text)?;
            let list = doc
                .as_array()
                .ok_or_else(|| malformed("expected a JSON array of queries"))?;
            list.iter()
                .map(|v| Ok(query::from_betae(v, g)?))
                .collect()
        }
        _ => Ok(query::parse_lines(&text, g)?),
    }
}

pub fn query(a: &QueryArgs) -> Result<()> {
    let cfg = config("query", a)?;
    let g = a.input.load()?;
    let exprs = read_queries(&a.queries, a.format, &g)?;
    let programs = exprs
        .iter()
        .map(query::compile)
        .collect::<kgreason::Result<Vec<_>>>()?;
    let mode = match a.mode {
        ModeArg::NoisyOr => ProjectionMode::NoisyOr,
        ModeArg::Max => ProjectionMode::Max,
    };
    let results = query::execute_batch(&g, &programs, mode)?;
    let names = g.entities();
    let mut records = Vec::with_capacity(results.len());
    for (i, (expr, set)) in exprs.iter().zip(&results).enumerate() {
        let mut ranked = set.ranked();
        if let Some(n) = a.top {
            ranked.truncate(n);
        }
        let answers: Vec<Value> = ranked
            .iter()
            .map(|(e, x)| json!({"entity": names.name(e.0), "id": e.0, "score": x}))
            .collect();
        records.push(json!({
            "index": i,
            "query": expr.to_sexpr(&g),
            "type": QueryType::detect(expr).map(|t| t.as_str()),
            "cardinality": set.cardinality(a.tau)?,
            "answers": answers,
        }));
    }
    let body = json!({
        "entity_count": g.entity_count(),
        "queries": records,
    });
    emit(a.out.path(), &json_document(cfg, body)?)
}

// ---------------------------------------------------------------- sample-queries

#[derive(Args, Serialize)]
pub struct SampleArgs {
    /// Observed (training) triplets.
    #[arg(long)]
    pub train: PathBuf,
    /// Complete triplets; must contain every training triplet.
    #[arg(long)]
    pub full: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub load: LoadFlags,
    /// Comma-separated query types, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub types: Vec<String>,
    /// Queries per type.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Reject queries with more answers than this on the full graph.
    #[arg(long, default_value_t = 100)]
    pub max_answers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grounding attempts per type before giving up.
    #[arg(long)]
    pub max_attempts: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

fn query_types(names: &[String]) -> Result<Vec<QueryType>> {
    let mut out = Vec::new();
    for s in names {
        if s == "all" {
            out.extend(QueryType::ALL);
        } else {
            out.push(s.parse().map_err(|_| usage(format!("unknown query type `{s}`")))?);
        }
    }
    Ok(out)
}

pub fn sample_queries(a: &SampleArgs) -> Result<()> {
    let cfg = config("sample-queries", a)?;
    let types = query_types(&a.types)?;
    let pair = GraphPair::load(&a.train, &a.full, a.load.options())?;
    let mut records = Vec::new();
    for t in types {
        // Each type gets its own stream so adding a type leaves others unchanged.
        let mut opts = SampleOptions::new(a.count, a.seed.wrapping_add(t as u64));
        opts.max_answers = a.max_answers;
        if let Some(m) = a.max_attempts {
            opts.max_attempts = m;
        }
        for s in query::sample_queries(&pair, t, &opts)? {
            records.push(QueryRecord::new(&s, &pair.full)?);
        }
    }
    let body = json!({
        "entity_count": pair.full.entity_count(),
        "relation_count": pair.full.relation_count(),
        "queries": records,
    });
    emit(a.out.path(), &json_document(cfg, body)?)?;
    if let Some(p) = a.out.path() {
        write_sidecars(p, &pair.full)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Args, Serialize)]
pub struct EvalArgs {
    /// Whitespace-separated ranks; reports MR, MRR and Hits@K.
    #[arg(long, conflicts_with_all = ["predictions", "truth"])]
    pub ranks: Option<PathBuf>,
    /// `query` output, or a list of predicted values.
    #[arg(long, requires = "truth")]
    pub predictions: Option<PathBuf>,
    /// `sample-queries` output, or a list of true values.
    #[arg(long, requires = "predictions")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
    pub hits: Vec<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let x: f64 = tok.parse().map_err(|_| Error::Malformed {
                line: i + 1,
                reason: format!("`{tok}` is not a number"),
            })?;
            out.push(x);
        }
    }
    Ok(out)
}

/// Undefined metrics (constant input, zero truth, ...) are reported as null.
fn optional(r: kgreason::Result<f64>) -> Result<Value> {
    match r {
        Ok(x) => Ok(num(x)),
        Err(Error::Metric(_)) => Ok(Value::Null),
        Err(e) => Err(e.into()),
    }
}

fn value_metrics(pred: &[f64], truth: &[f64]) -> Result<Value> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        }
        .into());
    }
    Ok(json!({
        "count": pred.len(),
        "mape": optional(metrics::mape(pred, truth))?,
        "spearman": optional(metrics::spearman(pred, truth))?,
        "pearson": optional(metrics::pearson(pred, truth))?,
    }))
}

#[derive(Default)]
struct Group {
    queries: usize,
    ranks: Vec<f64>,
    scored: Vec<ScoredQuery>,
    predicted: Vec<f64>,
    actual: Vec<f64>,
}

impl Group {
    fn summary(&self, hits: &[usize]) -> Result<Value> {
        let ranking = if self.ranks.is_empty() {
            Value::Null
        } else {
            serde_json::to_value(RankingReport::from_ranks(&self.ranks, hits)?)?
        };
        let auroc = if self.scored.is_empty() {
            Value::Null
        } else {
            optional(metrics::easy_vs_hard_auroc(&self.scored))?
        };
        Ok(json!({
            "queries": self.queries,
            "hard_answers": self.ranks.len(),
            "ranking": ranking,
            "auroc_queries": self.scored.len(),
            "auroc": auroc,
            "cardinality": value_metrics(&self.predicted, &self.actual)?,
        }))
    }
}

fn id_list(v: &Value, what: &str, n: usize) -> Result<Vec<usize>> {
    let list = v
        .as_array()
        .ok_or_else(|| malformed(format!("`{what}` is not an array")))?;
    list.iter()
        .map(|x| {
            let id = x
                .as_u64()
                .ok_or_else(|| malformed(format!("`{what}` holds a non-id {x}")))? as usize;
            if id >= n {
                return Err(Error::IdOutOfRange { kind: "entity", id, count: n }.into());
            }
            Ok(id)
        })
        .collect()
}

fn eval_queries(pred: &Value, truth: &Value, hits: &[usize]) -> Result<Value> {
    let n = pred["entity_count"]
        .as_u64()
        .ok_or_else(|| malformed("predictions lack `entity_count`"))? as usize;
    let p_list = pred["queries"]
        .as_array()
        .ok_or_else(|| malformed("predictions lack a `queries` array"))?;
    let t_list = truth["queries"]
        .as_array()
        .ok_or_else(|| malformed("truth lacks a `queries` array"))?;
    if p_list.len() != t_list.len() {
        return Err(Error::LengthMismatch {
            left: p_list.len(),
            right: t_list.len(),
        }
        .into());
    }
    let mut overall = Group::default();
    let mut by_type: BTreeMap<String, Group> = BTreeMap::new();
    for (i, (p, t)) in p_list.iter().zip(t_list).enumerate() {
        if p["query"] != t["query"] {
            return Err(malformed(format!("query {i} differs between predictions and truth")));
        }
        let qtype = t["type"].as_str().unwrap_or("other").to_string();
        let easy = id_list(&t["easy"], "easy", n)?;
        let hard = id_list(&t["hard"], "hard", n)?;
        let mut scores = vec![0.0; n];
        let answers = p["answers"]
            .as_array()
            .ok_or_else(|| malformed(format!("query {i} has no `answers` array")))?;
        for ans in answers {
            let id = id_list(&json!([ans["id"]]), "answers", n)?[0];
            scores[id] = ans["score"]
                .as_f64()
                .ok_or_else(|| malformed(format!("query {i} has a non-numeric score")))?;
        }
        let known: Vec<usize> = easy.iter().chain(&hard).copied().collect();
        let ranks = hard
            .iter()
            .map(|&h| metrics::filtered_rank(&scores, h, &known))
            .collect::<kgreason::Result<Vec<_>>>()?;
        let predicted = p["cardinality"]
            .as_f64()
            .ok_or_else(|| malformed(format!("query {i} has no cardinality")))?;
        for g in [&mut overall, by_type.entry(qtype.clone()).or_default()] {
            g.queries += 1;
            g.ranks.extend(&ranks);
            if !easy.is_empty() && !hard.is_empty() {
                g.scored.push(ScoredQuery {
                    scores: scores.clone(),
                    easy: easy.clone(),
                    hard: hard.clone(),
                });
            }
            g.predicted.push(predicted);
            g.actual.push(known.len() as f64);
        }
    }
    let mut types = serde_json::Map::new();
    for (t, g) in &by_type {
        types.insert(t.clone(), g.summary(hits)?);
    }
    Ok(json!({
        "overall": overall.summary(hits)?,
        "by_type": types,
    }))
}

fn is_json_document(path: &Path) -> Result<Option<Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        Ok(Some(serde_json::from_str(&text)?))
    } else {
        Ok(None)
    }
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let cfg = config("eval", a)?;
    let body = match (&a.ranks, &a.predictions, &a.truth) {
        (Some(path), _, _) => {
            let ranks = read_numbers(path)?;
            serde_json::to_value(RankingReport::from_ranks(&ranks, &a.hits)?)?
        }
        (None, Some(p), Some(t)) => match (is_json_document(p)?, is_json_document(t)?) {
            (Some(pred), Some(truth)) => eval_queries(&pred, &truth, &a.hits)?,
            (None, None) => value_metrics(&read_numbers(p)?, &read_numbers(t)?)?,
            _ => return Err(usage("--predictions and --truth must both be JSON or both be value lists")),
        },
        _ => return Err(usage("either --ranks or --predictions with --truth is required")),
    };
    emit(a.out.path(), &json_document(cfg, body)?)
}

// ---------------------------------------------------------------- score

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingArg {
    Tsv,
    Binary,
}

#[derive(Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub scorer: Scorer,
    /// Embedding table to load.
    #[arg(long, conflicts_with = "generate")]
    pub table: Option<PathBuf>,
    /// Draw a seeded random table instead of loading one.
    #[arg(long)]
    pub generate: bool,
    /// Embedding dimension for --generate and --pattern.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Graph supplying names and, for --test, the triplets to filter.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub load: LoadFlags,
    /// Entity count for --generate without --graph.
    #[arg(long)]
    pub entities: Option<usize>,
    /// Relation count for --generate without --graph.
    #[arg(long)]
    pub relations: Option<usize>,
    /// Triplets to score (TSV of names).
    #[arg(long, conflicts_with = "test")]
    pub triplets: Option<PathBuf>,
    /// Test triplets for filtered link prediction (TSV of names).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Check a relation pattern on random embeddings instead of scoring.
    #[arg(long, conflicts_with_all = ["table", "generate", "triplets", "test"])]
    pub pattern: Option<Pattern>,
    /// Random draws for --pattern.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Tolerance for --pattern.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
    pub hits: Vec<usize>,
    /// Also write the table used (with name sidecars when --graph is given).
    #[arg(long)]
    #[serde(skip)]
    pub save_table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub encoding: EncodingArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputFlag,
}

fn read_named_triplets(path: &Path, g: &KnowledgeGraph) -> Result<Vec<Triplet>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let rows = parse_tsv(std::io::BufReader::new(file), false)?;
    rows.iter()
        .map(|r| {
            Ok(Triplet {
                head: g.entity_id(&r.head)?,
                relation: g.relation_id(&r.relation)?,
                tail: g.entity_id(&r.tail)?,
            })
        })
        .collect()
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let cfg = config("score", a)?;
    if let Some(pattern) = a.pattern {
        let report = embed::pattern_check(a.scorer, pattern, a.dim, a.samples, a.tolerance, a.seed)?;
        let mut body = serde_json::to_value(&report)?;
        body["max_error"] = num(report.max_error);
        return emit(a.out.path(), &json_document(cfg, body)?);
    }
    let graph = match &a.graph {
        Some(p) => Some(load_tsv(p, a.load.options())?),
        None => None,
    };
    let table = match (&a.table, a.generate) {
        (Some(path), _) => EmbeddingTable::load(path)?,
        (None, true) => {
            let (ne, nr) = match (&graph, a.entities, a.relations) {
                (Some(g), None, None) => (g.entity_count(), g.relation_count()),
                (None, Some(ne), Some(nr)) => (ne, nr),
                _ => return Err(usage("--generate needs either --graph or both --entities and --relations")),
            };
            EmbeddingTable::random(a.scorer, a.dim, ne, nr, a.seed)?
        }
        (None, false) => return Err(usage("one of --table, --generate or --pattern is required")),
    };
    table.check(a.scorer)?;
    let encoding = match a.encoding {
        EncodingArg::Tsv => Encoding::Tsv,
        EncodingArg::Binary => Encoding::Binary,
    };
    // Without a graph, names are the decimal ids.
    let g = match graph {
        Some(g) => g,
        None => KnowledgeGraph::from_triplets(table.entity_count(), table.relation_count(), vec![])?,
    };
    if let Some(p) = &a.save_table {
        table.save(p, encoding)?;
        if a.graph.is_some() {
            write_sidecars(p, &g)?;
        }
    }
    if let Some(path) = &a.triplets {
        let triplets = read_named_triplets(path, &g)?;
        let scores = embed::score_all(a.scorer, &table, &triplets)?;
        let mut out = tsv_header(&cfg);
        for (t, s) in triplets.iter().zip(scores) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{s}",
                g.entities().name(t.head.0),
                g.relations().name(t.relation.0),
                g.entities().name(t.tail.0)
            );
        }
        return emit(a.out.path(), &out);
    }
    let body = if let Some(path) = &a.test {
        let test = read_named_triplets(path, &g)?;
        let (ranks, report) = embed::link_prediction(a.scorer, &table, &test, &g, &a.hits)?;
        let per_triplet: Vec<Value> = test
            .iter()
            .zip(&ranks)
            .map(|(t, (h, r))| {
                json!({
                    "head": g.entities().name(t.head.0),
                    "relation": g.relations().name(t.relation.0),
                    "tail": g.entities().name(t.tail.0),
                    "head_rank": h,
                    "tail_rank": r,
                })
            })
            .collect();
        json!({"report": report, "ranks": per_triplet})
    } else {
        json!({"table": table.header(encoding)})
    };
    emit(a.out.path(), &json_document(cfg, body)?)
}
