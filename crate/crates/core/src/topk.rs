//! Bounded top-k selection with the crate-wide ordering (score descending,
//! ties by ascending doc id).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::corpus::DocId;
use crate::dense::ScoredDoc;
use crate::scalar::Scalar;

/// Heap entry ordered so the binary max-heap keeps the *worst* candidate on
/// top: lower score ranks greater, and on equal scores the higher doc id
/// ranks greater (it is the one a tie should evict first).
struct WorstFirst<S: Scalar> {
    doc: DocId,
    score: S,
}

impl<S: Scalar> PartialEq for WorstFirst<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for WorstFirst<S> {}

impl<S: Scalar> PartialOrd for WorstFirst<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for WorstFirst<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .partial_cmp(&self.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.doc.cmp(&other.doc))
    }
}

pub(crate) struct TopK<S: Scalar> {
    cap: usize,
    heap: BinaryHeap<WorstFirst<S>>,
}

impl<S: Scalar> TopK<S> {
    pub(crate) fn new(cap: usize) -> Self {
        TopK {
            cap,
            heap: BinaryHeap::with_capacity(cap.saturating_add(1)),
        }
    }

    pub(crate) fn is_full(&self) -> bool {
        self.heap.len() >= self.cap
    }

    /// The current worst retained candidate, if any.
    pub(crate) fn worst(&self) -> Option<(DocId, S)> {
        self.heap.peek().map(|e| (e.doc, e.score))
    }

    pub(crate) fn push(&mut self, doc: DocId, score: S) {
        if self.cap == 0 {
            return;
        }
        let entry = WorstFirst { doc, score };
        if self.heap.len() < self.cap {
            self.heap.push(entry);
        } else if entry < *self.heap.peek().expect("non-empty at capacity") {
            // Strictly better than the worst retained candidate.
            self.heap.pop();
            self.heap.push(entry);
        }
    }

    pub(crate) fn into_sorted_entries(self) -> Vec<ScoredDoc<S>> {
        let mut out: Vec<ScoredDoc<S>> = self
            .heap
            .into_iter()
            .map(|e| ScoredDoc {
                doc: e.doc,
                score: e.score,
            })
            .collect();
        out.sort_unstable_by(crate::dense::cmp_ranked);
        out
    }

    pub(crate) fn into_sorted_ids(self) -> Vec<DocId> {
        self.into_sorted_entries().into_iter().map(|e| e.doc).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<DocId> {
        v.iter().copied().map(DocId).collect()
    }

    #[test]
    fn keeps_best_k_sorted() {
        let mut top = TopK::new(2);
        for (d, s) in [(0u32, 1.0f32), (1, 3.0), (2, 2.0), (3, 0.5)] {
            top.push(DocId(d), s);
        }
        assert_eq!(top.into_sorted_ids(), ids(&[1, 2]));
    }

    #[test]
    fn equal_scores_prefer_lower_doc_id() {
        let mut top = TopK::new(2);
        for d in [5u32, 3, 4, 1] {
            top.push(DocId(d), 1.0f32);
        }
        assert_eq!(top.into_sorted_ids(), ids(&[1, 3]));
    }

    #[test]
    fn capacity_zero_keeps_nothing() {
        let mut top = TopK::new(0);
        top.push(DocId(0), 1.0f32);
        assert!(top.into_sorted_ids().is_empty());
    }

    #[test]
    fn worst_tracks_eviction_boundary() {
        let mut top = TopK::new(2);
        top.push(DocId(0), 1.0f32);
        top.push(DocId(1), 2.0);
        assert_eq!(top.worst(), Some((DocId(0), 1.0)));
        top.push(DocId(2), 3.0);
        assert_eq!(top.worst(), Some((DocId(1), 2.0)));
    }
}
