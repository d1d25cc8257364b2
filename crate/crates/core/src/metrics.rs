//! Filtered ranking and evaluation statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn metric(msg: impl Into<String>) -> Error {
    Error::Metric(msg.into())
}

/// Rank of `answer` among all candidates not in `known`, counting each tied
/// competitor as half a place (so a block of ties gets its mean rank).
pub fn filtered_rank(scores: &[f64], answer: usize, known: &[usize]) -> Result<f64> {
    if answer >= scores.len() {
        return Err(Error::IdOutOfRange {
            kind: "entity",
            id: answer,
            count: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(metric(format!("NaN score for candidate {i}")));
    }
    let mut filtered = vec![false; scores.len()];
    for &k in known {
        if k >= scores.len() {
            return Err(Error::IdOutOfRange {
                kind: "entity",
                id: k,
                count: scores.len(),
            });
        }
        filtered[k] = true;
    }
    filtered[answer] = true;
    let a = scores[answer];
    let (mut above, mut tied) = (0usize, 0usize);
    for (s, _) in scores.iter().zip(&filtered).filter(|(_, &f)| !f) {
        if *s > a {
            above += 1;
        } else if *s == a {
            tied += 1;
        }
    }
    Ok(1.0 + above as f64 + 0.5 * tied as f64)
}

fn check_ranks(ranks: &[f64]) -> Result<()> {
    if ranks.is_empty() {
        return Err(metric("no ranks"));
    }
    match ranks.iter().find(|&&r| !(r >= 1.0 && r.is_finite())) {
        Some(r) => Err(metric(format!("rank {r} is not a finite value of at least 1"))),
        None => Ok(()),
    }
}

pub fn mr(ranks: &[f64]) -> Result<f64> {
    check_ranks(ranks)?;
    Ok(ranks.iter().sum::<f64>() / ranks.len() as f64)
}

pub fn mrr(ranks: &[f64]) -> Result<f64> {
    check_ranks(ranks)?;
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

pub fn hits_at(ranks: &[f64], k: usize) -> Result<f64> {
    check_ranks(ranks)?;
    let hits = ranks.iter().filter(|&&r| r <= k as f64).count();
    Ok(hits as f64 / ranks.len() as f64)
}

pub const DEFAULT_HITS: [usize; 3] = [1, 3, 10];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub count: usize,
    pub mr: f64,
    pub mrr: f64,
    /// Keyed `hits@K`.
    pub hits: BTreeMap<String, f64>,
}

impl RankingReport {
    pub fn from_ranks(ranks: &[f64], ks: &[usize]) -> Result<Self> {
        let mut hits = BTreeMap::new();
        for &k in ks {
            hits.insert(format!("hits@{k}"), hits_at(ranks, k)?);
        }
        Ok(RankingReport {
            count: ranks.len(),
            mr: mr(ranks)?,
            mrr: mrr(ranks)?,
            hits,
        })
    }

    /// Unweighted mean of two reports' statistics.
    pub fn average(a: &RankingReport, b: &RankingReport) -> RankingReport {
        let hits = a
            .hits
            .iter()
            .filter_map(|(k, v)| b.hits.get(k).map(|w| (k.clone(), (v + w) / 2.0)))
            .collect();
        RankingReport {
            count: a.count + b.count,
            mr: (a.mr + b.mr) / 2.0,
            mrr: (a.mrr + b.mrr) / 2.0,
            hits,
        }
    }
}

/// Head and tail prediction reported separately and averaged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPredictionReport {
    pub head: RankingReport,
    pub tail: RankingReport,
    pub average: RankingReport,
}

impl LinkPredictionReport {
    pub fn new(head_ranks: &[f64], tail_ranks: &[f64], ks: &[usize]) -> Result<Self> {
        let head = RankingReport::from_ranks(head_ranks, ks)?;
        let tail = RankingReport::from_ranks(tail_ranks, ks)?;
        let average = RankingReport::average(&head, &tail);
        Ok(LinkPredictionReport {
            head,
            tail,
            average,
        })
    }
}

/// Probability that an easy answer outscores a hard one, ties counting half.
pub fn auroc(easy: &[f64], hard: &[f64]) -> Result<f64> {
    if easy.is_empty() || hard.is_empty() {
        return Err(metric("AUROC needs at least one easy and one hard score"));
    }
    if easy.iter().chain(hard).any(|s| s.is_nan()) {
        return Err(metric("NaN score"));
    }
    let mut sorted = hard.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut credit = 0u64; // in half-units
    for &s in easy {
        let below = sorted.partition_point(|&h| h < s);
        let not_above = sorted.partition_point(|&h| h <= s);
        credit += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(credit as f64 / (2.0 * easy.len() as f64 * hard.len() as f64))
}

/// One query's candidate scores with its easy and hard answer ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredQuery {
    pub scores: Vec<f64>,
    pub easy: Vec<usize>,
    pub hard: Vec<usize>,
}

/// Macro-averaged easy-versus-hard AUROC.
pub fn easy_vs_hard_auroc(queries: &[ScoredQuery]) -> Result<f64> {
    if queries.is_empty() {
        return Err(metric("no queries"));
    }
    let mut total = 0.0;
    for (i, q) in queries.iter().enumerate() {
        let pick = |ids: &[usize]| -> Result<Vec<f64>> {
            ids.iter()
                .map(|&e| {
                    q.scores.get(e).copied().ok_or(Error::IdOutOfRange {
                        kind: "entity",
                        id: e,
                        count: q.scores.len(),
                    })
                })
                .collect()
        };
        if q.easy.iter().any(|e| q.hard.contains(e)) {
            return Err(metric(format!("query {i}: easy and hard answers overlap")));
        }
        total += auroc(&pick(&q.easy)?, &pick(&q.hard)?)
            .map_err(|e| metric(format!("query {i}: {e}")))?;
    }
    Ok(total / queries.len() as f64)
}

/// 1-based ranks with tied blocks sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(metric(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(metric("correlation needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(metric("correlation undefined for constant input"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.iter().chain(truth).any(|v| v.is_nan()) {
        return Err(metric("NaN value"));
    }
    pearson(&average_ranks(pred), &average_ranks(truth))
}

/// Mean absolute percentage error.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(metric(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(metric("no values"));
    }
    if let Some(t) = truth.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(metric(format!("truth value {t} is not positive")));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs() / t).sum();
    Ok(sum / pred.len() as f64 * 100.0)
}
