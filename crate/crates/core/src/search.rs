//! Graph-accelerated dense search.
//!
//! All three entry points share the same skeleton: BM25 seeds from the
//! inverted index, dense scoring against the vector store, one ranked result
//! list plus a work trace. They differ in how far they explore the proximity
//! graph:
//!
//! * [`rerank_search`]: no exploration, score the seeds only.
//! * [`proactive_search`]: one hop, score seeds plus all their stored
//!   neighbors (at most n*(k+1) documents).
//! * [`adaptive_search`]: iterate, expanding the neighbors of the current
//!   top c until a round contributes nothing new. The scored set grows
//!   strictly every round and is bounded by D, so termination is guaranteed.
//!
//! A query with no lexical match anywhere returns an empty result with
//! `seeds_found = 0` rather than falling back to another seed source; the
//! condition is visible in the trace and handled by the caller.

use std::time::{Duration, Instant};

use crate::corpus::{DocId, VectorStore};
use crate::dense::{score_set_with, ScoredDoc, ScoredList, Similarity};
use crate::error::{Error, Result};
use crate::graph::{neighbors, ProximityGraph};
use crate::lexical::{lexical_top_n, Bm25Params, InvertedIndex};
use crate::scalar::Scalar;

/// Search-time knobs. `n` is the seed count, `k` the neighbors taken per
/// document (at most the graph's stored k), `c` the adaptive frontier width,
/// `depth` the final list length.
#[derive(Clone, Debug)]
pub struct LadrParams<S: Scalar> {
    pub n: usize,
    pub k: usize,
    pub c: usize,
    pub depth: usize,
    pub bm25: Bm25Params<S>,
    /// Wall-clock cutoff for the adaptive loop; when it fires, the partial
    /// result is returned and the trace is flagged.
    pub timeout: Option<Duration>,
    pub similarity: Similarity,
}

impl<S: Scalar> LadrParams<S> {
    pub fn new(n: usize, k: usize, c: usize) -> Self {
        LadrParams {
            n,
            k,
            c,
            depth: 1000,
            bm25: Bm25Params::default(),
            timeout: None,
            similarity: Similarity::Dot,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    pub fn with_similarity(mut self, similarity: Similarity) -> Self {
        self.similarity = similarity;
        self
    }

    pub fn with_bm25(mut self, bm25: Bm25Params<S>) -> Self {
        self.bm25 = bm25;
        self
    }

    fn validate_base(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.depth == 0 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        Ok(())
    }

    /// Full validation against a graph: n >= 1, depth >= 1, 1 <= k <=
    /// graph.k, 1 <= c <= n.
    pub fn validate(&self, graph: &ProximityGraph) -> Result<()> {
        self.validate_base()?;
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.k > graph.k() {
            return Err(Error::Config(format!(
                "k ({}) exceeds stored graph k ({})",
                self.k,
                graph.k()
            )));
        }
        if self.c == 0 || self.c > self.n {
            return Err(Error::Config(format!(
                "c ({}) must satisfy 1 <= c <= n ({})",
                self.c, self.n
            )));
        }
        Ok(())
    }
}

/// Work accounting for one search call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchTrace {
    pub seeds_found: usize,
    /// Documents given a dense score; bounded by n*(k+1) for proactive and
    /// by D for adaptive.
    pub docs_scored: usize,
    /// Expansion rounds (adaptive; zero for the others).
    pub iterations: usize,
    pub wall_time: Duration,
    /// True when adaptive stopped on its wall-clock cutoff.
    pub timed_out: bool,
}

fn empty_result<S: Scalar>(start: Instant) -> (ScoredList<S>, SearchTrace) {
    (
        ScoredList::empty(),
        SearchTrace {
            seeds_found: 0,
            docs_scored: 0,
            iterations: 0,
            wall_time: start.elapsed(),
            timed_out: false,
        },
    )
}

/// One-hop expansion: score the union of the lexical seeds and their first k
/// stored neighbors.
pub fn proactive_search<S: Scalar>(
    qtokens: &[String],
    qvec: &[S],
    index: &InvertedIndex,
    graph: &ProximityGraph,
    store: &VectorStore<S>,
    params: &LadrParams<S>,
) -> Result<(ScoredList<S>, SearchTrace)> {
    let start = Instant::now();
    params.validate(graph)?;
    let seeds = lexical_top_n(index, qtokens, params.n, &params.bm25);
    if seeds.is_empty() {
        return Ok(empty_result(start));
    }
    let seed_ids: Vec<DocId> = seeds.ids().collect();
    let mut candidates = neighbors(graph, &seed_ids, params.k)?;
    candidates.extend_from_slice(&seed_ids);
    candidates.sort_unstable();
    candidates.dedup();
    let mut result = score_set_with(qvec, &candidates, store, params.similarity)?;
    let docs_scored = result.len();
    result.truncate(params.depth);
    Ok((
        result,
        SearchTrace {
            seeds_found: seed_ids.len(),
            docs_scored,
            iterations: 0,
            wall_time: start.elapsed(),
            timed_out: false,
        },
    ))
}

/// Iterative expansion: score the seeds, then repeatedly score the not yet
/// scored neighbors of the current top c until a round brings nothing new
/// (or the optional timeout fires).
pub fn adaptive_search<S: Scalar>(
    qtokens: &[String],
    qvec: &[S],
    index: &InvertedIndex,
    graph: &ProximityGraph,
    store: &VectorStore<S>,
    params: &LadrParams<S>,
) -> Result<(ScoredList<S>, SearchTrace)> {
    let start = Instant::now();
    params.validate(graph)?;
    let seeds = lexical_top_n(index, qtokens, params.n, &params.bm25);
    if seeds.is_empty() {
        return Ok(empty_result(start));
    }
    let seeds_found = seeds.len();
    let seed_ids: Vec<DocId> = seeds.ids().collect();

    let mut scored = vec![false; store.len()];
    let mut ranked = score_set_with(qvec, &seed_ids, store, params.similarity)?.into_entries();
    for e in &ranked {
        scored[e.doc.idx()] = true;
    }

    let mut iterations = 0usize;
    let mut timed_out = false;
    loop {
        if let Some(limit) = params.timeout {
            if start.elapsed() >= limit {
                timed_out = true;
                break;
            }
        }
        let c_eff = params.c.min(ranked.len());
        let frontier: Vec<DocId> = ranked[..c_eff].iter().map(|e| e.doc).collect();
        let mut fresh = neighbors(graph, &frontier, params.k)?;
        fresh.retain(|d| !scored[d.idx()]);
        if fresh.is_empty() {
            break;
        }
        let batch = score_set_with(qvec, &fresh, store, params.similarity)?.into_entries();
        for e in &batch {
            scored[e.doc.idx()] = true;
        }
        ranked = merge_ranked(ranked, batch);
        iterations += 1;
    }

    let docs_scored = ranked.len();
    let mut result = ScoredList::from_sorted(ranked);
    result.truncate(params.depth);
    Ok((
        result,
        SearchTrace {
            seeds_found,
            docs_scored,
            iterations,
            wall_time: start.elapsed(),
            timed_out,
        },
    ))
}

/// Merges two ranked runs over disjoint doc sets into one ranked run.
fn merge_ranked<S: Scalar>(a: Vec<ScoredDoc<S>>, b: Vec<ScoredDoc<S>>) -> Vec<ScoredDoc<S>> {
    use std::cmp::Ordering;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.into_iter().peekable();
    let mut ib = b.into_iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => {
                if crate::dense::cmp_ranked(x, y) != Ordering::Greater {
                    out.push(ia.next().unwrap());
                } else {
                    out.push(ib.next().unwrap());
                }
            }
            (Some(_), None) => out.push(ia.next().unwrap()),
            (None, Some(_)) => out.push(ib.next().unwrap()),
            (None, None) => break,
        }
    }
    out
}

/// Baseline: dense re-scoring of the lexical top n, no graph. Uses `n`,
/// `depth`, `bm25`, and `similarity` from the params; `k` and `c` are
/// ignored.
pub fn rerank_search<S: Scalar>(
    qtokens: &[String],
    qvec: &[S],
    index: &InvertedIndex,
    store: &VectorStore<S>,
    params: &LadrParams<S>,
) -> Result<(ScoredList<S>, SearchTrace)> {
    let start = Instant::now();
    params.validate_base()?;
    let seeds = lexical_top_n(index, qtokens, params.n, &params.bm25);
    if seeds.is_empty() {
        return Ok(empty_result(start));
    }
    let seed_ids: Vec<DocId> = seeds.ids().collect();
    let mut result = score_set_with(qvec, &seed_ids, store, params.similarity)?;
    let docs_scored = result.len();
    result.truncate(params.depth);
    Ok((
        result,
        SearchTrace {
            seeds_found: seed_ids.len(),
            docs_scored,
            iterations: 0,
            wall_time: start.elapsed(),
            timed_out: false,
        },
    ))
}
