//! Document proximity graph: for every document, an ordered list of its k
//! most similar documents, built exactly (brute force), approximately
//! (single-layer incremental beam-search insertion), or lexically (BM25).
//!
//! Rows store ids only, sorted by descending similarity under the measure
//! that built them, ties by ascending doc id. Rows never contain their own
//! document and may be shorter than k when fewer neighbors exist (always the
//! case when D-1 < k, and routinely for BM25 rows over disjoint vocabulary).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bytes;
use crate::corpus::{Corpus, DocId, VectorStore};
use crate::dense::{similarity, ScoredDoc, Similarity};
use crate::error::{Error, Result};
use crate::lexical::{lexical_top_n, tokenize, Bm25Params, InvertedIndex};
use crate::scalar::Scalar;
use crate::topk::TopK;

pub const GRAPH_MAGIC: &[u8; 8] = b"LADRGRF1";

/// Immutable adjacency structure; rows are stored back to back with offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProximityGraph {
    k: usize,
    offsets: Vec<u32>,
    ids: Vec<DocId>,
}

impl ProximityGraph {
    /// Validates and adopts per-document neighbor rows: no self-loops, ids in
    /// range, no duplicates within a row, row length <= k. Row *order* is the
    /// builder's responsibility (similarity values are not retained).
    pub fn from_rows(k: usize, rows: Vec<Vec<DocId>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("graph k must be >= 1".into()));
        }
        let d = rows.len();
        let mut offsets = Vec::with_capacity(d + 1);
        let mut ids = Vec::new();
        // Epoch-stamped seen marks: duplicate detection without a per-row set.
        let mut seen = vec![0u32; d];
        offsets.push(0);
        for (row_idx, row) in rows.iter().enumerate() {
            if row.len() > k {
                return Err(Error::Format(format!(
                    "graph row {row_idx} has {} entries, more than k={k}",
                    row.len()
                )));
            }
            let epoch = row_idx as u32 + 1;
            for &id in row {
                if id.idx() >= d {
                    return Err(Error::Id(id.0, d));
                }
                if id.idx() == row_idx {
                    return Err(Error::Format(format!("graph row {row_idx} contains itself")));
                }
                if seen[id.idx()] == epoch {
                    return Err(Error::Format(format!(
                        "graph row {row_idx} contains {id} twice"
                    )));
                }
                seen[id.idx()] = epoch;
                ids.push(id);
            }
            offsets.push(ids.len() as u32);
        }
        Ok(ProximityGraph { k, offsets, ids })
    }

    pub fn doc_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, doc: DocId) -> &[DocId] {
        let start = self.offsets[doc.idx()] as usize;
        let end = self.offsets[doc.idx() + 1] as usize;
        &self.ids[start..end]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[DocId]> {
        (0..self.doc_count()).map(|i| self.row(DocId(i as u32)))
    }
}

/// Bundle of builder settings, mirroring the CLI surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphMethod {
    Exact,
    Approx,
    Bm25,
}

#[derive(Clone, Debug)]
pub struct GraphBuildConfig<S: Scalar> {
    pub method: GraphMethod,
    pub k: usize,
    /// Beam width for the approx method.
    pub beam: usize,
    /// Document terms used as the pseudo-query for the bm25 method.
    pub m_terms: usize,
    /// Shuffle seed for the approx method's insertion order.
    pub seed: u64,
    pub similarity: Similarity,
    pub bm25: Bm25Params<S>,
}

impl<S: Scalar> GraphBuildConfig<S> {
    pub fn new(method: GraphMethod, k: usize) -> Self {
        GraphBuildConfig {
            method,
            k,
            beam: 64,
            m_terms: 32,
            seed: 42,
            similarity: Similarity::Dot,
            bm25: Bm25Params::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("graph k must be >= 1".into()));
        }
        match self.method {
            GraphMethod::Approx if self.beam < self.k => Err(Error::Config(format!(
                "beam ({}) must be >= k ({})",
                self.beam, self.k
            ))),
            GraphMethod::Bm25 if self.m_terms == 0 => {
                Err(Error::Config("m_terms must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn check_buildable(d: usize, k: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::GraphTooSmall(d));
    }
    if k == 0 {
        return Err(Error::Config("graph k must be >= 1".into()));
    }
    Ok(())
}

/// Brute-force exact k-nearest-neighbor rows under the inner product.
pub fn build_exact_graph<S: Scalar>(store: &VectorStore<S>, k: usize) -> Result<ProximityGraph> {
    build_exact_graph_with(store, k, Similarity::Dot)
}

pub fn build_exact_graph_with<S: Scalar>(
    store: &VectorStore<S>,
    k: usize,
    sim: Similarity,
) -> Result<ProximityGraph> {
    let d = store.len();
    check_buildable(d, k)?;
    let rows: Vec<Vec<DocId>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let q = store.row(DocId(i as u32));
            let mut top = TopK::new(k);
            for j in 0..d {
                if j != i {
                    let doc = DocId(j as u32);
                    top.push(doc, similarity(sim, q, store.row(doc)));
                }
            }
            top.into_sorted_ids()
        })
        .collect();
    ProximityGraph::from_rows(k, rows)
}

/// Single-layer incremental approximate kNN graph. Documents are inserted in
/// a seed-shuffled order; each insertion runs a greedy best-first search with
/// a `beam`-sized result pool over the partially built graph, starting from a
/// fixed entry point (the first inserted document), connects to the top k
/// discovered, and adds reverse edges pruned back to the k most similar.
pub fn build_approx_graph<S: Scalar>(
    store: &VectorStore<S>,
    k: usize,
    beam: usize,
    seed: u64,
) -> Result<ProximityGraph> {
    build_approx_graph_with(store, k, beam, seed, Similarity::Dot)
}

pub fn build_approx_graph_with<S: Scalar>(
    store: &VectorStore<S>,
    k: usize,
    beam: usize,
    seed: u64,
    sim: Similarity,
) -> Result<ProximityGraph> {
    let d = store.len();
    check_buildable(d, k)?;
    if beam < k {
        return Err(Error::Config(format!("beam ({beam}) must be >= k ({k})")));
    }

    let mut order: Vec<u32> = (0..d as u32).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let entry = DocId(order[0]);

    let mut adj: Vec<Vec<ScoredDoc<S>>> = vec![Vec::new(); d];
    let mut searcher = BeamSearcher::new(d);
    for &raw in &order[1..] {
        let doc = DocId(raw);
        let qvec = store.row(doc);
        let mut found = searcher.search(store, qvec, entry, beam, &adj, sim);
        found.truncate(k);
        for &ScoredDoc { doc: nb, score } in &found {
            let row = &mut adj[nb.idx()];
            row.push(ScoredDoc { doc, score });
            if row.len() > k {
                row.sort_unstable_by(crate::dense::cmp_ranked);
                row.truncate(k);
            }
        }
        adj[doc.idx()] = found;
    }

    let rows: Vec<Vec<DocId>> = adj
        .into_iter()
        .map(|mut row| {
            row.sort_unstable_by(crate::dense::cmp_ranked);
            row.into_iter().map(|e| e.doc).collect()
        })
        .collect();
    ProximityGraph::from_rows(k, rows)
}

/// Greedy best-first search over a partially built adjacency list, keeping a
/// bounded pool of the best visited candidates. Visited marks are epoch
/// stamps so the scratch allocation is reused across insertions.
struct BeamSearcher {
    visited: Vec<u32>,
    epoch: u32,
}

impl BeamSearcher {
    fn new(d: usize) -> Self {
        BeamSearcher {
            visited: vec![0; d],
            epoch: 0,
        }
    }

    fn search<S: Scalar>(
        &mut self,
        store: &VectorStore<S>,
        qvec: &[S],
        entry: DocId,
        beam: usize,
        adj: &[Vec<ScoredDoc<S>>],
        sim: Similarity,
    ) -> Vec<ScoredDoc<S>> {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        // Frontier entry ordered best-first: higher score pops first, ties by
        // ascending doc id.
        struct Frontier<S: Scalar>(ScoredDoc<S>);
        impl<S: Scalar> PartialEq for Frontier<S> {
            fn eq(&self, other: &Self) -> bool {
                self.cmp(other) == Ordering::Equal
            }
        }
        impl<S: Scalar> Eq for Frontier<S> {}
        impl<S: Scalar> PartialOrd for Frontier<S> {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl<S: Scalar> Ord for Frontier<S> {
            fn cmp(&self, other: &Self) -> Ordering {
                self.0
                    .score
                    .partial_cmp(&other.0.score)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| other.0.doc.cmp(&self.0.doc))
            }
        }

        self.epoch += 1;
        let mut pool = TopK::new(beam);
        let mut frontier = BinaryHeap::new();
        self.visited[entry.idx()] = self.epoch;
        let entry_score = similarity(sim, qvec, store.row(entry));
        pool.push(entry, entry_score);
        frontier.push(Frontier(ScoredDoc {
            doc: entry,
            score: entry_score,
        }));

        while let Some(Frontier(cand)) = frontier.pop() {
            if pool.is_full() {
                // Expanding a candidate strictly worse than the whole pool
                // cannot improve it: every score reachable matters only if it
                // beats the pool's worst.
                let (wd, ws) = pool.worst().expect("pool is full");
                let worse = cand.score < ws || (cand.score == ws && cand.doc > wd);
                if worse {
                    break;
                }
            }
            for &ScoredDoc { doc: nb, .. } in &adj[cand.doc.idx()] {
                if self.visited[nb.idx()] == self.epoch {
                    continue;
                }
                self.visited[nb.idx()] = self.epoch;
                let score = similarity(sim, qvec, store.row(nb));
                pool.push(nb, score);
                frontier.push(Frontier(ScoredDoc { doc: nb, score }));
            }
        }
        pool.into_sorted_entries()
    }
}

/// Lexical proximity rows: document d's row is the BM25 top k (excluding d)
/// for a pseudo-query made of d's `m_terms` highest tf*idf terms. Documents
/// that tokenize to nothing get an empty row.
pub fn build_bm25_graph<S: Scalar>(
    index: &InvertedIndex,
    corpus: &Corpus,
    k: usize,
    m_terms: usize,
    params: &Bm25Params<S>,
) -> Result<ProximityGraph> {
    let d = corpus.doc_count();
    check_buildable(d, k)?;
    if m_terms == 0 {
        return Err(Error::Config("m_terms must be >= 1".into()));
    }
    if index.doc_count() != d {
        return Err(Error::Alignment(format!(
            "index covers {} documents, corpus has {d}",
            index.doc_count()
        )));
    }

    let rows: Vec<Vec<DocId>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let doc = DocId(i as u32);
            let tokens = tokenize(&corpus.doc(doc).text);
            if tokens.is_empty() {
                return Vec::new();
            }
            let mut counts: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            let mut weighted: Vec<(String, f64)> = counts
                .into_iter()
                .map(|(t, tf)| {
                    let w = f64::from(tf) * index.idf(&t);
                    (t, w)
                })
                .collect();
            // Heaviest terms first; ties by term so the selection is stable.
            weighted.sort_unstable_by(|a, b| {
                b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
            });
            weighted.truncate(m_terms);
            let query: Vec<String> = weighted.into_iter().map(|(t, _)| t).collect();
            // k+1 then drop self: the document usually ranks itself first.
            let hits = lexical_top_n(index, &query, k + 1, params);
            let mut row: Vec<DocId> = hits.ids().filter(|&h| h != doc).collect();
            row.truncate(k);
            row
        })
        .collect();

    let empty_rows = rows.iter().filter(|r| r.is_empty()).count();
    if empty_rows > 0 {
        log::warn!("bm25 graph: {empty_rows} of {d} documents produced empty rows");
    }
    ProximityGraph::from_rows(k, rows)
}

/// Union of the first `k_use` stored neighbors of every doc in `docs`,
/// deduplicated and returned in ascending id order (set semantics: the result
/// is independent of the input order).
pub fn neighbors(graph: &ProximityGraph, docs: &[DocId], k_use: usize) -> Result<Vec<DocId>> {
    if k_use > graph.k() {
        return Err(Error::Config(format!(
            "k_use ({k_use}) exceeds stored graph k ({})",
            graph.k()
        )));
    }
    let mut out = Vec::with_capacity(docs.len().saturating_mul(k_use));
    for &doc in docs {
        if doc.idx() >= graph.doc_count() {
            return Err(Error::Id(doc.0, graph.doc_count()));
        }
        let row = graph.row(doc);
        out.extend_from_slice(&row[..k_use.min(row.len())]);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Ids-only payload size in bytes of a graph whose rows are all full: D * k
/// ids at 4 bytes each (headers and row lengths excluded).
pub fn full_graph_payload_bytes(d: u64, k: u64) -> u64 {
    d * k * 4
}

/// Writes `LADRGRF1`: magic, u32 D, u32 k, u16 row length per document, then
/// row-major u32 neighbor ids.
pub fn save_graph(graph: &ProximityGraph, path: impl AsRef<Path>) -> Result<()> {
    let d = u32::try_from(graph.doc_count())
        .map_err(|_| Error::Format("graph too large for u32 doc count".into()))?;
    let k = u32::try_from(graph.k())
        .map_err(|_| Error::Format("graph k too large for u32 header".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GRAPH_MAGIC)?;
    bytes::write_u32(&mut w, d)?;
    bytes::write_u32(&mut w, k)?;
    for row in graph.rows() {
        let len = u16::try_from(row.len())
            .map_err(|_| Error::Format("graph row too long for u16 length".into()))?;
        bytes::write_u16(&mut w, len)?;
    }
    for row in graph.rows() {
        for &id in row {
            bytes::write_u32(&mut w, id.0)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<ProximityGraph> {
    let path = path.as_ref();
    let what = format!("graph file {}", path.display());
    let mut r = BufReader::new(File::open(path)?);
    bytes::read_magic(&mut r, GRAPH_MAGIC, &what)?;
    let d = bytes::read_u32(&mut r, &what)? as usize;
    let k = bytes::read_u32(&mut r, &what)? as usize;
    if d == 0 || k == 0 {
        return Err(Error::Format(format!("{what}: zero document count or k")));
    }
    let mut lens = Vec::with_capacity(d);
    for _ in 0..d {
        lens.push(bytes::read_u16(&mut r, &what)? as usize);
    }
    let mut rows = Vec::with_capacity(d);
    for &len in &lens {
        let mut row = Vec::with_capacity(len);
        for _ in 0..len {
            row.push(DocId(bytes::read_u32(&mut r, &what)?));
        }
        rows.push(row);
    }
    bytes::expect_eof(&mut r, &what)?;
    // from_rows re-checks self-loops, ranges, duplicates, and row lengths, so
    // a corrupted payload cannot produce an invalid graph.
    ProximityGraph::from_rows(k, rows)
}
