//! Inverted index and BM25 seed retrieval.
//!
//! Seeds come from exhaustive document-at-a-time scoring over the union of
//! the query terms' postings with a bounded result heap; at the corpus sizes
//! this engine targets, dynamic pruning (WAND and friends) buys nothing and
//! is deliberately out of scope. The retrieval contract is the exact lexical
//! top n.
//!
//! BM25 per-term contribution for a term t in document d:
//!
//! ```text
//! idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))
//! idf(t) = ln(1 + (D - df(t) + 0.5) / (df(t) + 0.5))
//! ```
//!
//! summed over *distinct* query terms. The +1 inside the log keeps idf
//! positive for terms appearing in most documents.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::bytes;
use crate::corpus::{Corpus, DocId};
use crate::dense::ScoredList;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topk::TopK;

pub const INDEX_MAGIC: &[u8; 8] = b"LADRIDX1";

/// Lowercased alphanumeric runs; every non-alphanumeric character separates.
/// Unicode letters and digits count as alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                cur.push(lc);
            }
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocId,
    pub tf: u32,
}

/// Term -> postings map plus the document-length statistics BM25 needs.
/// Postings lists are sorted by ascending doc id.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_len: Vec<u32>,
    total_len: u64,
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.total_len as f64 / self.doc_len.len() as f64
    }

    pub fn doc_len(&self, doc: DocId) -> u32 {
        self.doc_len[doc.idx()]
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let d = self.doc_count() as f64;
        let df = self.df(term) as f64;
        (1.0 + (d - df + 0.5) / (df + 0.5)).ln()
    }
}

/// BM25 free parameters; defaults k1=0.9, b=0.4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bm25Params<S: Scalar> {
    pub k1: S,
    pub b: S,
}

impl<S: Scalar> Default for Bm25Params<S> {
    fn default() -> Self {
        Bm25Params {
            k1: S::from_f64(0.9),
            b: S::from_f64(0.4),
        }
    }
}

impl<S: Scalar> Bm25Params<S> {
    /// Validated constructor: requires k1 >= 0 and 0 <= b <= 1.
    pub fn new(k1: S, b: S) -> Result<Self> {
        if !(k1 >= S::zero()) {
            return Err(Error::Config(format!("bm25 k1 must be >= 0, got {k1}")));
        }
        if !(b >= S::zero() && b <= S::one()) {
            return Err(Error::Config(format!("bm25 b must be in [0, 1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// Tokenizes every document (in parallel) and merges the counts into an
/// index. Fails with `EmptyIndex` if no document produces a single token.
pub fn build_lexical_index(corpus: &Corpus) -> Result<InvertedIndex> {
    let per_doc: Vec<(HashMap<String, u32>, u32)> = (0..corpus.doc_count())
        .into_par_iter()
        .map(|i| {
            let tokens = tokenize(&corpus.doc(DocId(i as u32)).text);
            let len = tokens.len() as u32;
            let mut counts = HashMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            (counts, len)
        })
        .collect();

    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_len = Vec::with_capacity(per_doc.len());
    let mut total_len = 0u64;
    for (i, (counts, len)) in per_doc.into_iter().enumerate() {
        doc_len.push(len);
        total_len += u64::from(len);
        // Doc order drives the merge, so postings lists come out sorted by
        // doc id without an extra sort.
        for (term, tf) in counts {
            postings.entry(term).or_default().push(Posting {
                doc: DocId(i as u32),
                tf,
            });
        }
    }
    if total_len == 0 {
        return Err(Error::EmptyIndex);
    }
    Ok(InvertedIndex {
        postings,
        doc_len,
        total_len,
    })
}

/// Exact BM25 top n over the union of the query terms' postings,
/// document-at-a-time, bounded heap. Only documents sharing at least one
/// query term can appear; ties break by ascending doc id.
pub fn lexical_top_n<S: Scalar>(
    index: &InvertedIndex,
    query_tokens: &[String],
    n: usize,
    params: &Bm25Params<S>,
) -> ScoredList<S> {
    struct Cursor<'a, S> {
        list: &'a [Posting],
        pos: usize,
        idf: S,
    }

    if n == 0 {
        return ScoredList::empty();
    }
    // Distinct terms only: BM25 sums one contribution per term, however often
    // it repeats in the query.
    let mut terms: Vec<&str> = query_tokens.iter().map(String::as_str).collect();
    terms.sort_unstable();
    terms.dedup();

    let mut cursors: Vec<Cursor<'_, S>> = terms
        .into_iter()
        .filter_map(|t| {
            index.postings(t).map(|list| Cursor {
                list,
                pos: 0,
                idf: S::from_f64(index.idf(t)),
            })
        })
        .collect();
    if cursors.is_empty() {
        return ScoredList::empty();
    }

    let k1 = params.k1;
    let k1_plus_1 = k1 + S::one();
    // Denominator split: tf + k1*(1-b) + k1*b*len/avgdl.
    let len_free = k1 * (S::one() - params.b);
    let len_scale = k1 * params.b / S::from_f64(index.avgdl());

    let mut top = TopK::new(n);
    loop {
        let mut current: Option<DocId> = None;
        for c in &cursors {
            if let Some(p) = c.list.get(c.pos) {
                current = Some(current.map_or(p.doc, |d| d.min(p.doc)));
            }
        }
        let Some(doc) = current else { break };
        let len_term = len_scale * S::from_f64(f64::from(index.doc_len(doc)));
        let mut score = S::zero();
        for c in &mut cursors {
            if let Some(p) = c.list.get(c.pos) {
                if p.doc == doc {
                    let tf = S::from_f64(f64::from(p.tf));
                    score += c.idf * tf * k1_plus_1 / (tf + len_free + len_term);
                    c.pos += 1;
                }
            }
        }
        top.push(doc, score);
    }
    ScoredList::from_sorted(top.into_sorted_entries())
}

/// SHA-256 of a file's bytes; keys the index cache to its source corpus.
pub fn corpus_checksum(path: impl AsRef<Path>) -> Result<[u8; 32]> {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    let mut reader = BufReader::new(File::open(path)?);
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = reader.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hasher.finalize().into())
}

/// Serializes the index as an `LADRIDX1` cache file carrying the checksum of
/// the corpus it was built from. Terms are written in sorted order, so the
/// bytes are a pure function of the index.
pub fn save_index(index: &InvertedIndex, checksum: &[u8; 32], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(INDEX_MAGIC)?;
    w.write_all(checksum)?;
    let d = u32::try_from(index.doc_count())
        .map_err(|_| Error::Format("index too large for u32 doc count".into()))?;
    bytes::write_u32(&mut w, d)?;
    bytes::write_u64(&mut w, index.total_len)?;
    for &len in &index.doc_len {
        bytes::write_u32(&mut w, len)?;
    }
    bytes::write_u64(&mut w, index.postings.len() as u64)?;
    for (term, list) in &index.postings {
        let term_len = u32::try_from(term.len())
            .map_err(|_| Error::Format("term too long for index file".into()))?;
        bytes::write_u32(&mut w, term_len)?;
        w.write_all(term.as_bytes())?;
        bytes::write_u32(&mut w, list.len() as u32)?;
        for p in list {
            bytes::write_u32(&mut w, p.doc.0)?;
            bytes::write_u32(&mut w, p.tf)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads an `LADRIDX1` cache, returning the index and the corpus checksum it
/// was keyed to.
pub fn load_index(path: impl AsRef<Path>) -> Result<(InvertedIndex, [u8; 32])> {
    let path = path.as_ref();
    let what = format!("index file {}", path.display());
    let mut r = BufReader::new(File::open(path)?);
    bytes::read_magic(&mut r, INDEX_MAGIC, &what)?;
    let mut checksum = [0u8; 32];
    bytes::read_exact(&mut r, &mut checksum, &what)?;
    let d = bytes::read_u32(&mut r, &what)? as usize;
    if d == 0 {
        return Err(Error::Format(format!("{what}: zero document count")));
    }
    let total_len = bytes::read_u64(&mut r, &what)?;
    if total_len == 0 {
        return Err(Error::Format(format!("{what}: empty index payload")));
    }
    let mut doc_len = Vec::with_capacity(d);
    for _ in 0..d {
        doc_len.push(bytes::read_u32(&mut r, &what)?);
    }
    let n_terms = bytes::read_u64(&mut r, &what)?;
    let mut postings = BTreeMap::new();
    let mut prev_term: Option<String> = None;
    for _ in 0..n_terms {
        let term_len = bytes::read_u32(&mut r, &what)? as usize;
        let mut term_buf = vec![0u8; term_len];
        bytes::read_exact(&mut r, &mut term_buf, &what)?;
        let term = String::from_utf8(term_buf)
            .map_err(|_| Error::Format(format!("{what}: non-UTF-8 term")))?;
        if prev_term.as_deref() >= Some(term.as_str()) {
            return Err(Error::Format(format!("{what}: terms not strictly sorted")));
        }
        let list_len = bytes::read_u32(&mut r, &what)? as usize;
        if list_len == 0 {
            return Err(Error::Format(format!("{what}: empty postings list")));
        }
        let mut list = Vec::with_capacity(list_len);
        let mut prev_doc: Option<u32> = None;
        for _ in 0..list_len {
            let doc = bytes::read_u32(&mut r, &what)?;
            let tf = bytes::read_u32(&mut r, &what)?;
            if doc as usize >= d {
                return Err(Error::Format(format!("{what}: doc id {doc} out of range")));
            }
            if tf == 0 {
                return Err(Error::Format(format!("{what}: zero tf for doc {doc}")));
            }
            if prev_doc.is_some_and(|p| p >= doc) {
                return Err(Error::Format(format!(
                    "{what}: postings not strictly sorted by doc id"
                )));
            }
            prev_doc = Some(doc);
            list.push(Posting { doc: DocId(doc), tf });
        }
        postings.insert(term.clone(), list);
        prev_term = Some(term);
    }
    bytes::expect_eof(&mut r, &what)?;
    Ok((
        InvertedIndex {
            postings,
            doc_len,
            total_len,
        },
        checksum,
    ))
}
