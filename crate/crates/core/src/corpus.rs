//! On-disk inputs: corpus text, dense vectors, queries, and relevance
//! judgments. Everything loads into immutable in-memory stores; documents get
//! dense ordinal ids in file order so vector and graph rows can be addressed
//! directly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::bytes;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const VEC_MAGIC: &[u8; 8] = b"LADRVEC1";

/// Dense ordinal document index in `[0, D)`, bijective with the external
/// string ids through [`Corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(pub u32);

impl DocId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug)]
pub struct Doc {
    pub external_id: String,
    pub text: String,
}

/// Document collection with the external-id/ordinal bijection.
#[derive(Clone, Debug)]
pub struct Corpus {
    docs: Vec<Doc>,
    id_map: HashMap<String, DocId>,
}

impl Corpus {
    pub fn from_docs(docs: Vec<(String, String)>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut id_map = HashMap::with_capacity(docs.len());
        let docs: Vec<Doc> = docs
            .into_iter()
            .map(|(external_id, text)| Doc { external_id, text })
            .collect();
        for (i, doc) in docs.iter().enumerate() {
            if id_map.insert(doc.external_id.clone(), DocId(i as u32)).is_some() {
                return Err(Error::DuplicateId(doc.external_id.clone()));
            }
        }
        Ok(Corpus { docs, id_map })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn doc(&self, id: DocId) -> &Doc {
        &self.docs[id.idx()]
    }

    pub fn external_id(&self, id: DocId) -> &str {
        &self.docs[id.idx()].external_id
    }

    /// Looks up the ordinal for an external id.
    pub fn resolve(&self, external_id: &str) -> Option<DocId> {
        self.id_map.get(external_id).copied()
    }

    pub fn docs(&self) -> impl Iterator<Item = (DocId, &Doc)> {
        self.docs
            .iter()
            .enumerate()
            .map(|(i, d)| (DocId(i as u32), d))
    }
}

/// Row-major dense document vectors. On disk these are always f32; in memory
/// the scalar type is chosen by the caller (loading into f64 widens exactly).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorStore<S: Scalar> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> VectorStore<S> {
    /// Builds a store from a flat row-major buffer, rejecting non-finite rows.
    pub fn from_flat(dim: usize, data: Vec<S>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("vector store: dim must be >= 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Format(format!(
                "vector store: {} values do not form whole rows of dim {dim}",
                data.len()
            )));
        }
        for (row, chunk) in data.chunks_exact(dim).enumerate() {
            if chunk.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidVector(row));
            }
        }
        Ok(VectorStore { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Format("vector store: ragged rows".into()));
        }
        Self::from_flat(dim, rows.into_iter().flatten().collect())
    }

    /// Number of document rows.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, id: DocId) -> &[S] {
        let start = id.idx() * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Fails unless corpus and store agree on the document count.
pub fn check_corpus_alignment<S: Scalar>(corpus: &Corpus, store: &VectorStore<S>) -> Result<()> {
    if corpus.doc_count() != store.len() {
        return Err(Error::Alignment(format!(
            "corpus has {} documents, vector store has {} rows",
            corpus.doc_count(),
            store.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Query<S: Scalar> {
    pub qid: String,
    pub text: String,
    pub vec: Vec<S>,
}

/// Queries with their precomputed vectors, aligned by input line order.
#[derive(Clone, Debug)]
pub struct QuerySet<S: Scalar> {
    pub queries: Vec<Query<S>>,
}

impl<S: Scalar> QuerySet<S> {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Query<S>> {
        self.queries.iter()
    }
}

/// Graded relevance judgments: qid -> external doc id -> grade.
///
/// BTreeMaps keep per-query and per-doc iteration deterministic.
#[derive(Clone, Debug, Default)]
pub struct Qrels {
    pub judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn grades(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn query_count(&self) -> usize {
        self.judgments.len()
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads a corpus from TSV (`external_id<TAB>text`) or JSONL
/// (`{"id":..., "text":...}`), chosen by file extension (`.json`/`.jsonl` for
/// JSONL, anything else is TSV). Ordinals follow file order from 0.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let jsonl = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("json")
    );
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let (id, text) = if jsonl {
            parse_jsonl_doc(line).map_err(|msg| parse_err(path, lineno, msg))?
        } else {
            let (id, text) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(path, lineno, "expected id<TAB>text"))?;
            (id.to_string(), text.to_string())
        };
        docs.push((id, text));
    }
    Corpus::from_docs(docs)
}

fn parse_jsonl_doc(line: &str) -> std::result::Result<(String, String), String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    let id = match obj.get("id") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(_) => return Err("\"id\" must be a string or number".into()),
        None => return Err("missing \"id\" field".into()),
    };
    let text = match obj.get("text") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err("\"text\" must be a string".into()),
        None => return Err("missing \"text\" field".into()),
    };
    Ok((id, text))
}

/// Reads an `LADRVEC1` file: magic, little-endian u32 D and u32 dim, then
/// D*dim f32 values row-major. Rows containing NaN/Inf are rejected.
pub fn load_vectors<S: Scalar>(path: impl AsRef<Path>) -> Result<VectorStore<S>> {
    let path = path.as_ref();
    let what = format!("vector file {}", path.display());
    let mut r = BufReader::new(File::open(path)?);
    bytes::read_magic(&mut r, VEC_MAGIC, &what)?;
    let d = bytes::read_u32(&mut r, &what)? as usize;
    let dim = bytes::read_u32(&mut r, &what)? as usize;
    if d == 0 || dim == 0 {
        return Err(Error::Format(format!("{what}: zero document count or dim")));
    }
    let mut data = Vec::with_capacity(d * dim);
    let mut row_buf = vec![0u8; dim * 4];
    for row in 0..d {
        bytes::read_exact(&mut r, &mut row_buf, &what)?;
        let mut finite = true;
        for chunk in row_buf.chunks_exact(4) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            finite &= v.is_finite();
            data.push(S::from_f32(v));
        }
        if !finite {
            return Err(Error::InvalidVector(row));
        }
    }
    bytes::expect_eof(&mut r, &what)?;
    Ok(VectorStore { dim, data })
}

/// Writes a store in `LADRVEC1` format, narrowing to f32 on disk.
pub fn save_vectors<S: Scalar>(store: &VectorStore<S>, path: impl AsRef<Path>) -> Result<()> {
    let d = u32::try_from(store.len())
        .map_err(|_| Error::Format("vector store too large for u32 header".into()))?;
    let dim = u32::try_from(store.dim())
        .map_err(|_| Error::Format("vector dim too large for u32 header".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(VEC_MAGIC)?;
    bytes::write_u32(&mut w, d)?;
    bytes::write_u32(&mut w, dim)?;
    for row in store.rows() {
        for &v in row {
            w.write_all(&v.to_f32().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads query texts (TSV `qid<TAB>text`) plus an aligned `LADRVEC1` vector
/// file; line i of the text file owns vector row i.
pub fn load_queries<S: Scalar>(
    text_path: impl AsRef<Path>,
    vec_path: impl AsRef<Path>,
) -> Result<QuerySet<S>> {
    let text_path = text_path.as_ref();
    let reader = BufReader::new(File::open(text_path)?);
    let mut texts: Vec<(String, String)> = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let (qid, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(text_path, lineno, "expected qid<TAB>text"))?;
        if seen.insert(qid.to_string(), ()).is_some() {
            return Err(Error::DuplicateId(qid.to_string()));
        }
        texts.push((qid.to_string(), text.to_string()));
    }
    let vecs: VectorStore<S> = load_vectors(vec_path)?;
    if vecs.len() != texts.len() {
        return Err(Error::Alignment(format!(
            "{} query texts but {} query vectors",
            texts.len(),
            vecs.len()
        )));
    }
    let queries = texts
        .into_iter()
        .zip(vecs.rows())
        .map(|((qid, text), row)| Query {
            qid,
            text,
            vec: row.to_vec(),
        })
        .collect();
    Ok(QuerySet { queries })
}

/// Reads TREC qrels: whitespace-separated `qid 0 docno grade` lines.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut qrels = Qrels::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(parse_err(path, lineno, "expected `qid 0 docno grade`"));
        }
        let grade: i64 = cols[3]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad grade {:?}", cols[3])))?;
        let grade = u32::try_from(grade)
            .map_err(|_| parse_err(path, lineno, format!("negative grade {grade}")))?;
        qrels
            .judgments
            .entry(cols[0].to_string())
            .or_default()
            .insert(cols[2].to_string(), grade);
    }
    Ok(qrels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &[u8], ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn tsv_corpus_assigns_ids_in_file_order() {
        let f = write_temp(b"a\tcat\nb\tdog\n", ".tsv");
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.doc_count(), 2);
        assert_eq!(c.resolve("a"), Some(DocId(0)));
        assert_eq!(c.resolve("b"), Some(DocId(1)));
        assert_eq!(c.doc(DocId(0)).text, "cat");
        assert_eq!(c.external_id(DocId(1)), "b");
    }

    #[test]
    fn duplicate_external_id_is_rejected() {
        let f = write_temp(b"a\tcat\na\tdog\n", ".tsv");
        assert!(matches!(load_corpus(f.path()), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn empty_file_is_rejected() {
        let f = write_temp(b"", ".tsv");
        assert!(matches!(load_corpus(f.path()), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn malformed_tsv_line_reports_its_number() {
        let f = write_temp(b"a\tcat\nno tab here\n", ".tsv");
        match load_corpus(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_corpus_parses_string_and_numeric_ids() {
        let f = write_temp(
            br#"{"id":"a","text":"cat"}
{"id":7,"text":"dog"}
"#,
            ".jsonl",
        );
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.resolve("a"), Some(DocId(0)));
        assert_eq!(c.resolve("7"), Some(DocId(1)));
    }

    #[test]
    fn jsonl_bad_line_reports_its_number() {
        let f = write_temp(b"{\"id\":\"a\",\"text\":\"cat\"}\n{\"id\":\"b\"}\n", ".jsonl");
        match load_corpus(f.path()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("text"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn vec_file(d: u32, dim: u32, values: &[f32]) -> tempfile::NamedTempFile {
        let mut content = Vec::new();
        content.extend_from_slice(VEC_MAGIC);
        content.extend_from_slice(&d.to_le_bytes());
        content.extend_from_slice(&dim.to_le_bytes());
        for v in values {
            content.extend_from_slice(&v.to_le_bytes());
        }
        write_temp(&content, ".vec")
    }

    #[test]
    fn vectors_round_trip_the_header_example() {
        let f = vec_file(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let store: VectorStore<f32> = load_vectors(f.path()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.dim(), 2);
        assert_eq!(store.row(DocId(0)), &[1.0, 0.0]);
        assert_eq!(store.row(DocId(1)), &[0.0, 1.0]);
    }

    #[test]
    fn short_payload_is_truncation() {
        let f = vec_file(2, 2, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            load_vectors::<f32>(f.path()),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut content = b"NOTLADRV".to_vec();
        content.extend_from_slice(&1u32.to_le_bytes());
        content.extend_from_slice(&1u32.to_le_bytes());
        content.extend_from_slice(&1.0f32.to_le_bytes());
        let f = write_temp(&content, ".vec");
        assert!(matches!(
            load_vectors::<f32>(f.path()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn nan_row_is_invalid_vector_with_row_index() {
        let f = vec_file(2, 2, &[1.0, 0.0, f32::NAN, 1.0]);
        assert!(matches!(
            load_vectors::<f32>(f.path()),
            Err(Error::InvalidVector(1))
        ));
    }

    #[test]
    fn trailing_bytes_are_a_format_error() {
        let f = vec_file(1, 1, &[1.0, 2.0]);
        assert!(matches!(
            load_vectors::<f32>(f.path()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn save_load_round_trip_is_bit_identical() {
        let store = VectorStore::from_rows(vec![
            vec![0.1f32, -2.5, 3.75],
            vec![1e-30, 4.0, -0.0],
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.vec");
        let p2 = dir.path().join("b.vec");
        save_vectors(&store, &p1).unwrap();
        let loaded: VectorStore<f32> = load_vectors(&p1).unwrap();
        assert_eq!(loaded, store);
        save_vectors(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn f64_load_widens_exactly_and_narrows_back() {
        let store = VectorStore::from_rows(vec![vec![0.1f32, 7.25], vec![-3.5, 1e-12]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.vec");
        let p2 = dir.path().join("b.vec");
        save_vectors(&store, &p1).unwrap();
        let wide: VectorStore<f64> = load_vectors(&p1).unwrap();
        assert_eq!(wide.row(DocId(0))[0], f64::from(0.1f32));
        save_vectors(&wide, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn query_count_mismatch_is_alignment_error() {
        let texts = write_temp(b"q1\tcat\nq2\tdog\nq3\tfish\n", ".tsv");
        let vecs = vec_file(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            load_queries::<f32>(texts.path(), vecs.path()),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn queries_align_by_line_order() {
        let texts = write_temp(b"q1\tcat\nq2\tdog\n", ".tsv");
        let vecs = vec_file(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let qs: QuerySet<f32> = load_queries(texts.path(), vecs.path()).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs.queries[0].qid, "q1");
        assert_eq!(qs.queries[0].vec, vec![1.0, 0.0]);
        assert_eq!(qs.queries[1].text, "dog");
    }

    #[test]
    fn duplicate_qid_is_rejected() {
        let texts = write_temp(b"q1\tcat\nq1\tdog\n", ".tsv");
        let vecs = vec_file(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            load_queries::<f32>(texts.path(), vecs.path()),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn qrels_line_parses_into_judgments() {
        let f = write_temp(b"19 0 docA 3\n19 0 docB 0\n20 0 docA 1\n", ".qrels");
        let q = load_qrels(f.path()).unwrap();
        assert_eq!(q.grades("19").unwrap()["docA"], 3);
        assert_eq!(q.grades("19").unwrap()["docB"], 0);
        assert_eq!(q.grades("20").unwrap()["docA"], 1);
    }

    #[test]
    fn negative_grade_is_parse_error() {
        let f = write_temp(b"19 0 docA -1\n", ".qrels");
        assert!(matches!(load_qrels(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn corpus_store_alignment_check() {
        let corpus = Corpus::from_docs(vec![
            ("a".into(), "x".into()),
            ("b".into(), "y".into()),
        ])
        .unwrap();
        let store = VectorStore::from_rows(vec![vec![1.0f32]]).unwrap();
        assert!(matches!(
            check_corpus_alignment(&corpus, &store),
            Err(Error::Alignment(_))
        ));
    }
}
