//! Ranking quality metrics (nDCG, Recall@k, RR@k, rank-biased overlap) and a
//! single-threaded latency benchmark.
//!
//! Conventions follow trec_eval where it has an opinion: gain is the raw
//! grade with a 1/log2(rank+1) discount, aggregation is the arithmetic mean
//! over the queries in the qrels, and a judged query missing from the run
//! counts as zero rather than being skipped.

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;
use std::time::Instant;

use crate::corpus::{Qrels, Query, QuerySet};
use crate::dense::ScoredList;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::search::SearchTrace;
use crate::trec::RunFile;

/// Cutoffs and thresholds for the metric suite. Defaults: nDCG@10,
/// Recall@1000 with minimum grade 2, RR@10 with minimum grade 1, RBO
/// persistence 0.99.
#[derive(Clone, Copy, Debug)]
pub struct MetricConfig {
    pub ndcg_cutoff: usize,
    pub recall_cutoff: usize,
    pub recall_min_rel: u32,
    pub rr_cutoff: usize,
    pub rr_min_rel: u32,
    pub rbo_p: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            ndcg_cutoff: 10,
            recall_cutoff: 1000,
            recall_min_rel: 2,
            rr_cutoff: 10,
            rr_min_rel: 1,
            rbo_p: 0.99,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ndcg_cutoff == 0 || self.recall_cutoff == 0 || self.rr_cutoff == 0 {
            return Err(Error::Config("metric cutoffs must be >= 1".into()));
        }
        if !(self.rbo_p > 0.0 && self.rbo_p < 1.0) {
            return Err(Error::Config(format!(
                "rbo_p must be in (0,1), got {}",
                self.rbo_p
            )));
        }
        Ok(())
    }
}

fn discount(rank: usize) -> f64 {
    // rank is 1-based; discount 1/log2(rank+1).
    1.0 / ((rank + 1) as f64).log2()
}

/// Normalized DCG at `cutoff` over a ranked doc list. Returns 0 when the
/// ideal DCG is 0 (no positive grade); aggregation excludes such queries
/// before calling.
pub fn ndcg(ranked: &[&str], grades: &BTreeMap<String, u32>, cutoff: usize) -> f64 {
    let dcg: f64 = ranked
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, d)| grades.get(*d).copied().unwrap_or(0) as f64 * discount(i + 1))
        .sum();
    let mut ideal: Vec<u32> = grades.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, g)| *g as f64 * discount(i + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Fraction of the docs graded >= `min_rel` that appear in the top
/// `cutoff`. Returns 0 when no doc qualifies; aggregation excludes such
/// queries before calling.
pub fn recall_at(ranked: &[&str], grades: &BTreeMap<String, u32>, cutoff: usize, min_rel: u32) -> f64 {
    let qualifying = grades.values().filter(|g| **g >= min_rel).count();
    if qualifying == 0 {
        return 0.0;
    }
    let hit = ranked
        .iter()
        .take(cutoff)
        .filter(|d| grades.get(**d).copied().unwrap_or(0) >= min_rel)
        .count();
    hit as f64 / qualifying as f64
}

/// Reciprocal rank of the first doc graded >= `min_rel` within the top
/// `cutoff`, else 0.
pub fn rr_at(ranked: &[&str], grades: &BTreeMap<String, u32>, cutoff: usize, min_rel: u32) -> f64 {
    for (i, d) in ranked.iter().take(cutoff).enumerate() {
        if grades.get(*d).copied().unwrap_or(0) >= min_rel {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// Extrapolated rank-biased overlap between two duplicate-free rankings.
///
/// Both lists are truncated to L = min(|a|,|b|); agreement at depth d is
/// |prefix_d(a) ∩ prefix_d(b)|/d, and the agreement at L is assumed to
/// persist beyond it: RBO_EXT = (1-p)·Σ_{d=1..L} p^{d-1}·A_d + p^L·A_L.
///
/// Two empty lists agree perfectly (1.0); an empty list against a non-empty
/// one shares nothing (0.0).
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("rbo p must be in (0,1), got {p}")));
    }
    for (name, list) in [("first", a), ("second", b)] {
        let distinct: HashSet<&T> = list.iter().collect();
        if distinct.len() != list.len() {
            return Err(Error::Input(format!("duplicate ids in {name} rbo list")));
        }
    }
    let l = a.len().min(b.len());
    if l == 0 {
        return Ok(if a.is_empty() && b.is_empty() { 1.0 } else { 0.0 });
    }
    let mut seen_a: HashSet<&T> = HashSet::with_capacity(l);
    let mut seen_b: HashSet<&T> = HashSet::with_capacity(l);
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0; // p^{d-1}
    for d in 0..l {
        let (x, y) = (&a[d], &b[d]);
        if x == y {
            overlap += 1;
        } else {
            if seen_b.contains(x) {
                overlap += 1;
            }
            if seen_a.contains(y) {
                overlap += 1;
            }
            seen_a.insert(x);
            seen_b.insert(y);
        }
        sum += weight * overlap as f64 / (d + 1) as f64;
        weight *= p;
    }
    // weight is p^L here; extrapolate with A_L held constant.
    let a_l = overlap as f64 / l as f64;
    Ok((1.0 - p) * sum + weight * a_l)
}

/// Per-query metric values. `None` marks a query excluded from that
/// metric's mean (no positive grade for nDCG, no qualifying grade for
/// recall); RR has no exclusion rule.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryEval {
    pub qid: String,
    pub ndcg: Option<f64>,
    pub recall: Option<f64>,
    pub rr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// One row per qrels query, in qid order.
    pub per_query: Vec<QueryEval>,
    pub mean_ndcg: Option<f64>,
    pub mean_recall: Option<f64>,
    pub mean_rr: f64,
}

impl EvalReport {
    /// CSV breakdown, one row per query; excluded cells are left empty.
    pub fn per_query_csv(&self) -> String {
        let mut out = String::from("qid,ndcg,recall,rr\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for q in &self.per_query {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                q.qid,
                cell(q.ndcg),
                cell(q.recall),
                q.rr
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
        format!(
            "queries: {}\nndcg:    {}\nrecall:  {}\nrr:      {:.4}",
            self.per_query.len(),
            cell(self.mean_ndcg),
            cell(self.mean_recall),
            self.mean_rr
        )
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Scores a run against graded judgments. The query domain is the qrels:
/// run-only queries are ignored, judged queries missing from the run count
/// as zero. At least one judged query must appear in the run.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels, config: &MetricConfig) -> Result<EvalReport> {
    config.validate()?;
    if !qrels.judgments.keys().any(|qid| run.ranking(qid).is_some()) {
        return Err(Error::Eval(
            "run and qrels share no query ids".into(),
        ));
    }
    let mut per_query = Vec::with_capacity(qrels.query_count());
    let (mut ndcgs, mut recalls, mut rrs) = (Vec::new(), Vec::new(), Vec::new());
    for (qid, grades) in &qrels.judgments {
        let ranked = run.ranked_docs(qid).unwrap_or_default();
        let nd = if grades.values().any(|g| *g > 0) {
            let v = ndcg(&ranked, grades, config.ndcg_cutoff);
            ndcgs.push(v);
            Some(v)
        } else {
            None
        };
        let rec = if grades.values().any(|g| *g >= config.recall_min_rel) {
            let v = recall_at(&ranked, grades, config.recall_cutoff, config.recall_min_rel);
            recalls.push(v);
            Some(v)
        } else {
            None
        };
        let rr = rr_at(&ranked, grades, config.rr_cutoff, config.rr_min_rel);
        rrs.push(rr);
        per_query.push(QueryEval {
            qid: qid.clone(),
            ndcg: nd,
            recall: rec,
            rr,
        });
    }
    Ok(EvalReport {
        per_query,
        mean_ndcg: (!ndcgs.is_empty()).then(|| mean(&ndcgs)),
        mean_recall: (!recalls.is_empty()).then(|| mean(&recalls)),
        mean_rr: mean(&rrs),
    })
}

/// Latency statistics over a query set; milliseconds throughout.
#[derive(Clone, Debug)]
pub struct BenchStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub mean_docs_scored: f64,
    /// Median-of-reps per query, in query-set order.
    pub per_query_ms: Vec<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn p95(sorted: &[f64]) -> f64 {
    // Nearest-rank: the smallest value with >= 95% of observations at or
    // below it.
    let n = sorted.len();
    let rank = ((0.95 * n as f64).ceil() as usize).max(1);
    sorted[rank - 1]
}

/// Times `search_fn` per query: `warmup` untimed runs then `reps` timed
/// runs, the per-query value being the median of the reps. Strictly
/// sequential; run it on one thread for meaningful numbers.
pub fn bench<S, F>(
    queries: &QuerySet<S>,
    mut search_fn: F,
    warmup: usize,
    reps: usize,
) -> Result<BenchStats>
where
    S: Scalar,
    F: FnMut(&Query<S>) -> Result<(ScoredList<S>, SearchTrace)>,
{
    if reps == 0 {
        return Err(Error::Config("bench needs reps >= 1".into()));
    }
    if queries.is_empty() {
        return Err(Error::Config("bench needs a non-empty query set".into()));
    }
    let mut per_query_ms = Vec::with_capacity(queries.len());
    let mut docs_scored = Vec::with_capacity(queries.len());
    for q in queries.iter() {
        for _ in 0..warmup {
            search_fn(q)?;
        }
        let mut times = Vec::with_capacity(reps);
        let mut trace = None;
        for _ in 0..reps {
            let start = Instant::now();
            let (_, t) = search_fn(q)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
            trace = Some(t);
        }
        times.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        per_query_ms.push(median(&times));
        docs_scored.push(trace.expect("reps >= 1").docs_scored as f64);
    }
    let mut sorted = per_query_ms.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(BenchStats {
        mean_ms: mean(&per_query_ms),
        median_ms: median(&sorted),
        p95_ms: p95(&sorted),
        mean_docs_scored: mean(&docs_scored),
        per_query_ms,
    })
}
