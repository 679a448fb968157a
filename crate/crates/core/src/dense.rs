//! Dense similarity scoring: single pairs, candidate batches, and exhaustive
//! search over the whole store.
//!
//! The default measure is the inner product; cosine is available behind
//! [`Similarity`] for experimentation. The dot kernel accumulates strictly
//! left to right so that independently coded oracles summing in the natural
//! order reproduce scores bit for bit, ties included.

use std::cmp::Ordering;

use crate::corpus::{DocId, VectorStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topk::TopK;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Similarity {
    Dot,
    Cosine,
}

impl Default for Similarity {
    fn default() -> Self {
        Similarity::Dot
    }
}

/// One ranked result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredDoc<S: Scalar> {
    pub doc: DocId,
    pub score: S,
}

/// The crate-wide ranking order: score descending, ties by ascending doc id.
#[inline]
pub(crate) fn cmp_ranked<S: Scalar>(a: &ScoredDoc<S>, b: &ScoredDoc<S>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.doc.cmp(&b.doc))
}

/// Ranked results, sorted by score descending with ties broken by ascending
/// doc id; doc ids are unique.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredList<S: Scalar> {
    entries: Vec<ScoredDoc<S>>,
}

impl<S: Scalar> ScoredList<S> {
    pub fn empty() -> Self {
        ScoredList { entries: Vec::new() }
    }

    /// Sorts the entries into ranking order. Doc ids must be unique.
    pub fn from_unsorted(mut entries: Vec<ScoredDoc<S>>) -> Self {
        entries.sort_unstable_by(cmp_ranked);
        ScoredList { entries }
    }

    /// Wraps entries already in ranking order (checked in debug builds).
    pub(crate) fn from_sorted(entries: Vec<ScoredDoc<S>>) -> Self {
        debug_assert!(entries.windows(2).all(|w| cmp_ranked(&w[0], &w[1]) != Ordering::Greater));
        ScoredList { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ScoredDoc<S>] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScoredDoc<S>> {
        self.entries.iter()
    }

    /// Doc ids in rank order.
    pub fn ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.entries.iter().map(|e| e.doc)
    }

    pub fn truncate(&mut self, depth: usize) {
        self.entries.truncate(depth);
    }

    pub fn into_entries(self) -> Vec<ScoredDoc<S>> {
        self.entries
    }
}

/// Sequential left-to-right dot product; every scoring path funnels through
/// here so summation order is uniform crate-wide.
#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc = acc + x * y;
    }
    acc
}

#[inline]
fn norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

#[inline]
pub(crate) fn similarity<S: Scalar>(sim: Similarity, a: &[S], b: &[S]) -> S {
    match sim {
        Similarity::Dot => dot(a, b),
        Similarity::Cosine => {
            let denom = norm(a) * norm(b);
            if denom == S::zero() {
                S::zero()
            } else {
                dot(a, b) / denom
            }
        }
    }
}

fn check_dim<S: Scalar>(qvec: &[S], store: &VectorStore<S>) -> Result<()> {
    if qvec.len() != store.dim() {
        return Err(Error::Dim {
            query: qvec.len(),
            store: store.dim(),
        });
    }
    Ok(())
}

fn check_id<S: Scalar>(doc: DocId, store: &VectorStore<S>) -> Result<()> {
    if doc.idx() >= store.len() {
        return Err(Error::Id(doc.0, store.len()));
    }
    Ok(())
}

/// Inner product of the query vector with one document row.
pub fn dense_score<S: Scalar>(qvec: &[S], doc: DocId, store: &VectorStore<S>) -> Result<S> {
    check_dim(qvec, store)?;
    check_id(doc, store)?;
    Ok(dot(qvec, store.row(doc)))
}

/// Scores exactly the given candidate docs (a duplicate-free set) and ranks
/// them.
pub fn score_set<S: Scalar>(
    qvec: &[S],
    docs: &[DocId],
    store: &VectorStore<S>,
) -> Result<ScoredList<S>> {
    score_set_with(qvec, docs, store, Similarity::Dot)
}

pub fn score_set_with<S: Scalar>(
    qvec: &[S],
    docs: &[DocId],
    store: &VectorStore<S>,
    sim: Similarity,
) -> Result<ScoredList<S>> {
    check_dim(qvec, store)?;
    debug_assert!(
        {
            let mut seen = std::collections::HashSet::new();
            docs.iter().all(|d| seen.insert(*d))
        },
        "score_set requires a duplicate-free candidate set"
    );
    let mut entries = Vec::with_capacity(docs.len());
    for &doc in docs {
        check_id(doc, store)?;
        entries.push(ScoredDoc {
            doc,
            score: similarity(sim, qvec, store.row(doc)),
        });
    }
    Ok(ScoredList::from_unsorted(entries))
}

/// Scores every document and returns the best `depth`; the ground truth that
/// graph-based searches are measured against.
pub fn exhaustive_search<S: Scalar>(
    qvec: &[S],
    store: &VectorStore<S>,
    depth: usize,
) -> Result<ScoredList<S>> {
    exhaustive_search_with(qvec, store, depth, Similarity::Dot)
}

pub fn exhaustive_search_with<S: Scalar>(
    qvec: &[S],
    store: &VectorStore<S>,
    depth: usize,
    sim: Similarity,
) -> Result<ScoredList<S>> {
    check_dim(qvec, store)?;
    if depth == 0 {
        return Err(Error::Config("exhaustive search depth must be >= 1".into()));
    }
    let mut top = TopK::new(depth);
    for (i, row) in store.rows().enumerate() {
        top.push(DocId(i as u32), similarity(sim, qvec, row));
    }
    Ok(ScoredList::from_sorted(top.into_sorted_entries()))
}
