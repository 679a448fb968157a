//! TREC run files: per-query ranked lists with the classic six-column line
//! format `qid Q0 external_doc_id rank score run_tag`.
//!
//! Writes are canonical — qids in sorted order, ranks ascending, scores
//! printed with six decimals — so save→load→save is byte-identical.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::dense::ScoredList;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One retrieved document for one query. `rank` starts at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub doc: String,
    pub rank: u32,
    pub score: f64,
}

/// A system's output: for each qid, documents in rank order.
///
/// Invariants (enforced on construction and load): ranks are 1..=L
/// contiguous, scores non-increasing with rank, no duplicate doc within a
/// query, one tag for the whole file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    tag: String,
    rankings: BTreeMap<String, Vec<RunEntry>>,
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Input(format!("{what} must be non-empty")));
    }
    if s.chars().any(char::is_whitespace) {
        return Err(Error::Input(format!(
            "{what} {s:?} contains whitespace; the run format is whitespace-delimited"
        )));
    }
    Ok(())
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Result<Self> {
        let tag = tag.into();
        check_token("run tag", &tag)?;
        Ok(RunFile {
            tag,
            rankings: BTreeMap::new(),
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn query_count(&self) -> usize {
        self.rankings.len()
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    pub fn ranking(&self, qid: &str) -> Option<&[RunEntry]> {
        self.rankings.get(qid).map(Vec::as_slice)
    }

    /// Document ids for `qid` in rank order.
    pub fn ranked_docs(&self, qid: &str) -> Option<Vec<&str>> {
        self.rankings
            .get(qid)
            .map(|es| es.iter().map(|e| e.doc.as_str()).collect())
    }

    /// Adds a query's ranking from `(doc, score)` pairs already in rank
    /// order. Ranks are assigned 1..; an empty ranking is a no-op (the TREC
    /// convention for a query with no results is to emit no lines).
    pub fn push_ranking(&mut self, qid: impl Into<String>, docs: Vec<(String, f64)>) -> Result<()> {
        let qid = qid.into();
        check_token("qid", &qid)?;
        if self.rankings.contains_key(&qid) {
            return Err(Error::DuplicateId(qid));
        }
        if docs.is_empty() {
            return Ok(());
        }
        let mut entries = Vec::with_capacity(docs.len());
        let mut seen = HashSet::new();
        let mut prev = f64::INFINITY;
        for (i, (doc, score)) in docs.into_iter().enumerate() {
            check_token("doc id", &doc)?;
            if !score.is_finite() {
                return Err(Error::Input(format!("non-finite score for doc {doc:?}")));
            }
            if score > prev {
                return Err(Error::Input(format!(
                    "scores must be non-increasing with rank (doc {doc:?})"
                )));
            }
            prev = score;
            if !seen.insert(doc.clone()) {
                return Err(Error::DuplicateId(doc));
            }
            entries.push(RunEntry {
                doc,
                rank: (i + 1) as u32,
                score,
            });
        }
        self.rankings.insert(qid, entries);
        Ok(())
    }

    /// Convenience for the search pipeline: records a scored result list
    /// under `qid`, translating internal ids back to external ones.
    pub fn push_scored<S: Scalar>(
        &mut self,
        qid: impl Into<String>,
        list: &ScoredList<S>,
        corpus: &Corpus,
    ) -> Result<()> {
        let docs = list
            .iter()
            .map(|e| (corpus.external_id(e.doc).to_string(), e.score.to_f64()))
            .collect();
        self.push_ranking(qid, docs)
    }
}

pub fn save_run(path: impl AsRef<Path>, run: &RunFile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (qid, entries) in &run.rankings {
        for e in entries {
            writeln!(w, "{} Q0 {} {} {:.6} {}", qid, e.doc, e.rank, e.score, run.tag)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_run(path: impl AsRef<Path>) -> Result<RunFile> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let fail = |line: usize, msg: String| Error::Parse {
        path: pstr.clone(),
        line,
        msg,
    };
    let reader = BufReader::new(File::open(path)?);

    let mut tag: Option<String> = None;
    let mut rankings: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(fail(lineno, format!("expected 6 columns, got {}", cols.len())));
        }
        let (qid, q0, doc, rank_s, score_s, line_tag) =
            (cols[0], cols[1], cols[2], cols[3], cols[4], cols[5]);
        if q0 != "Q0" {
            return Err(fail(lineno, format!("expected literal Q0 in column 2, got {q0:?}")));
        }
        let rank: u32 = rank_s
            .parse()
            .map_err(|_| fail(lineno, format!("bad rank {rank_s:?}")))?;
        let score: f64 = score_s
            .parse()
            .map_err(|_| fail(lineno, format!("bad score {score_s:?}")))?;
        if !score.is_finite() {
            return Err(fail(lineno, format!("non-finite score {score_s:?}")));
        }
        match &tag {
            None => tag = Some(line_tag.to_string()),
            Some(t) if t != line_tag => {
                return Err(fail(
                    lineno,
                    format!("run tag changed from {t:?} to {line_tag:?}"),
                ));
            }
            Some(_) => {}
        }
        let entries = rankings.entry(qid.to_string()).or_default();
        // Per qid, lines must arrive in rank order with no gaps; qids may
        // interleave freely.
        let expected = (entries.len() + 1) as u32;
        if rank != expected {
            return Err(fail(
                lineno,
                format!("rank {rank} for qid {qid:?}, expected {expected} (ranks must be contiguous from 1)"),
            ));
        }
        if let Some(prev) = entries.last() {
            if score > prev.score {
                return Err(fail(
                    lineno,
                    format!("score increases with rank for qid {qid:?}"),
                ));
            }
        }
        entries.push(RunEntry {
            doc: doc.to_string(),
            rank,
            score,
        });
    }
    let tag = tag.ok_or_else(|| fail(1, "run file has no entries".to_string()))?;
    for (qid, entries) in &rankings {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in entries {
            if !seen.insert(e.doc.as_str()) {
                return Err(Error::Format(format!(
                    "duplicate doc {:?} in ranking for qid {qid:?}",
                    e.doc
                )));
            }
        }
    }
    Ok(RunFile { tag, rankings })
}
