//! End-to-end exercises of the `ladr` binary: build artifacts, search,
//! evaluate, bench, sweep, and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ladr_core::{save_vectors, VectorStore};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ladr"))
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed (code {:?})\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

/// Tiny multiplicative congruential generator so the fixture needs no
/// external randomness; quality is irrelevant, determinism is not.
struct Lcg(u64);

impl Lcg {
    fn pm(&mut self) -> f32 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 40) as f32) / (1u32 << 24) as f32 * 2.0 - 1.0
    }
}

struct Fixture {
    corpus: PathBuf,
    vectors: PathBuf,
    queries: PathBuf,
    query_vectors: PathBuf,
    qrels: PathBuf,
}

/// 20 clusters of 10 docs (dim 8); 8 queries aimed at even clusters, each
/// judging the first docs of its cluster relevant.
fn write_fixture(dir: &Path) -> Fixture {
    const CLUSTERS: usize = 20;
    const PER: usize = 10;
    const DIM: usize = 8;
    let mut rng = Lcg(42);
    let centers: Vec<Vec<f32>> = (0..CLUSTERS)
        .map(|_| (0..DIM).map(|_| rng.pm()).collect())
        .collect();

    let mut tsv = String::new();
    let mut rows = Vec::new();
    for c in 0..CLUSTERS {
        for j in 0..PER {
            let i = c * PER + j;
            tsv.push_str(&format!(
                "d{i}\tc{c}x c{c}y w{} w{}\n",
                (i * 7) % 31,
                (i * 13) % 31
            ));
            rows.push(centers[c].iter().map(|x| x + 0.05 * rng.pm()).collect());
        }
    }
    let corpus = dir.join("corpus.tsv");
    fs::write(&corpus, tsv).unwrap();
    let vectors = dir.join("docs.vec");
    save_vectors(&VectorStore::from_rows(rows).unwrap(), &vectors).unwrap();

    let mut qtsv = String::new();
    let mut qrows = Vec::new();
    let mut qrels_text = String::new();
    for qi in 0..8usize {
        let c = qi * 2;
        qtsv.push_str(&format!("q{qi}\tc{c}x w{}\n", (qi * 5) % 31));
        qrows.push(centers[c].iter().map(|x| x + 0.02 * rng.pm()).collect());
        for j in 0..3 {
            qrels_text.push_str(&format!("q{qi} 0 d{} 2\n", c * PER + j));
        }
        qrels_text.push_str(&format!("q{qi} 0 d{} 1\n", c * PER + 3));
    }
    let queries = dir.join("queries.tsv");
    fs::write(&queries, qtsv).unwrap();
    let query_vectors = dir.join("queries.vec");
    save_vectors(&VectorStore::from_rows(qrows).unwrap(), &query_vectors).unwrap();
    let qrels = dir.join("qrels.txt");
    fs::write(&qrels, qrels_text).unwrap();

    Fixture {
        corpus,
        vectors,
        queries,
        query_vectors,
        qrels,
    }
}

/// Builds the exact graph for a fixture and returns its path.
fn build_graph(fix: &Fixture, dir: &Path) -> PathBuf {
    let graph = dir.join("exact.graph");
    let out = bin()
        .args(["build-graph", "--method", "exact", "--k", "4"])
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--output")
        .arg(&graph)
        .output()
        .unwrap();
    ok(&out);
    graph
}

#[test]
fn builds_write_artifacts_and_validate_flags() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());

    let index = dir.path().join("corpus.idx");
    let out = bin()
        .arg("build-lexical")
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--output")
        .arg(&index)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    let stdout = ok(&out);
    assert!(stdout.contains("indexed 200 docs"), "stdout: {stdout}");
    assert!(index.exists());

    let exact = build_graph(&fix, dir.path());
    assert!(exact.exists());

    let bm25 = dir.path().join("bm25.graph");
    let out = bin()
        .args(["build-graph", "--method", "bm25", "--k", "4", "--m-terms", "3"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--index")
        .arg(&index)
        .arg("--output")
        .arg(&bm25)
        .output()
        .unwrap();
    let stdout = ok(&out);
    assert!(stdout.contains("built bm25 graph over 200 docs"), "stdout: {stdout}");

    // approx without --vectors is a flag-combination error: exit 2.
    let out = bin()
        .args(["build-graph", "--method", "approx", "--k", "4"])
        .arg("--output")
        .arg(dir.path().join("nope.graph"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn search_is_reproducible_and_eval_parses_it() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());
    let graph = build_graph(&fix, dir.path());

    let search = |algo: &str, output: &Path| {
        let mut cmd = bin();
        cmd.args(["search", "--algo", algo, "--n", "5", "--k", "4", "--c", "2"])
            .args(["--depth", "50"])
            .arg("--corpus")
            .arg(&fix.corpus)
            .arg("--vectors")
            .arg(&fix.vectors)
            .arg("--queries")
            .arg(&fix.queries)
            .arg("--query-vectors")
            .arg(&fix.query_vectors)
            .arg("--output")
            .arg(output);
        if algo == "proactive" || algo == "adaptive" {
            cmd.arg("--graph").arg(&graph);
        }
        ok(&cmd.output().unwrap())
    };

    let run_a = dir.path().join("a.run");
    let run_b = dir.path().join("b.run");
    search("proactive", &run_a);
    search("proactive", &run_b);
    assert_eq!(
        fs::read(&run_a).unwrap(),
        fs::read(&run_b).unwrap(),
        "identical invocations must write identical run files"
    );

    let text = fs::read_to_string(&run_a).unwrap();
    let first = text.lines().next().unwrap();
    let cols: Vec<&str> = first.split_whitespace().collect();
    assert_eq!(cols.len(), 6, "TREC line: {first}");
    assert_eq!(cols[1], "Q0");
    assert_eq!(cols[3], "1", "first line of a query block has rank 1");
    assert_eq!(cols[5], "proactive", "tag defaults to the algorithm name");

    // Other algorithms produce runs too; adaptive honors a generous timeout.
    for (algo, name) in [("adaptive", "c.run"), ("rerank", "d.run"), ("exhaustive", "e.run")] {
        search(algo, &dir.path().join(name));
    }

    // Evaluation consumes the run and prints a summary plus per-query CSV.
    let csv_path = dir.path().join("per_query.csv");
    let out = bin()
        .arg("eval")
        .arg("--run")
        .arg(&run_a)
        .arg("--qrels")
        .arg(&fix.qrels)
        .arg("--output")
        .arg(&csv_path)
        .output()
        .unwrap();
    let stdout = ok(&out);
    assert!(stdout.contains("queries: 8"), "stdout: {stdout}");
    assert!(stdout.contains("ndcg:"), "stdout: {stdout}");
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("qid,ndcg,recall,rr\n"));
    assert_eq!(csv.lines().count(), 9, "header + 8 query rows");

    // Judgments that never overlap the run are a runtime failure: exit 1
    // with a single machine-parsable error line.
    let stray = dir.path().join("stray_qrels.txt");
    fs::write(&stray, "zz 0 d0 2\n").unwrap();
    let out = bin()
        .arg("eval")
        .arg("--run")
        .arg(&run_a)
        .arg("--qrels")
        .arg(&stray)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "stderr: {err}");
}

#[test]
fn sweep_emits_one_csv_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());
    let graph = build_graph(&fix, dir.path());

    let out = bin()
        .args(["sweep", "--algo", "proactive", "--n", "2,4,8", "--k", "4"])
        .args(["--depth", "50"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--queries")
        .arg(&fix.queries)
        .arg("--query-vectors")
        .arg(&fix.query_vectors)
        .arg("--graph")
        .arg(&graph)
        .arg("--qrels")
        .arg(&fix.qrels)
        .output()
        .unwrap();
    let stdout = ok(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "algo,n,k,c,depth,mean_rbo,mean_ndcg,mean_latency_ms,mean_docs_scored"
    );
    assert_eq!(lines.len(), 4, "header + 3 grid rows:\n{stdout}");
    for (line, n) in lines[1..].iter().zip(["2", "4", "8"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 9, "row: {line}");
        assert_eq!(cols[0], "proactive");
        assert_eq!(cols[1], n);
        let rbo: f64 = cols[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&rbo));
        assert!(!cols[6].is_empty(), "qrels were given, ndcg column filled");
    }

    // More seeds never shrink the candidate pool: mean docs scored grows.
    let docs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    assert!(docs[0] <= docs[1] && docs[1] <= docs[2], "docs scored: {docs:?}");
}

#[test]
fn bench_reports_latency_stats() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());

    let csv_path = dir.path().join("latencies.csv");
    let out = bin()
        .args(["bench", "--algo", "rerank", "--n", "5", "--reps", "2"])
        .args(["--depth", "50"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--queries")
        .arg(&fix.queries)
        .arg("--query-vectors")
        .arg(&fix.query_vectors)
        .arg("--output")
        .arg(&csv_path)
        .output()
        .unwrap();
    let stdout = ok(&out);
    for needle in ["mean latency:", "median latency:", "p95 latency:", "mean docs scored:"] {
        assert!(stdout.contains(needle), "missing {needle:?} in:\n{stdout}");
    }
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("qid,median_ms\n"));
    assert_eq!(csv.lines().count(), 9, "header + 8 query rows");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());

    // Missing --graph for a graph-walking algorithm.
    let out = bin()
        .args(["search", "--algo", "adaptive"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--queries")
        .arg(&fix.queries)
        .arg("--query-vectors")
        .arg(&fix.query_vectors)
        .arg("--output")
        .arg(dir.path().join("x.run"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--graph is required"));

    // Unknown flags and invalid enum values are rejected by the parser.
    let out = bin().args(["search", "--frobnicate"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin()
        .args(["sweep", "--algo", "exhaustive"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "sweep rejects the unsweepable algorithm");
}

#[test]
fn stale_index_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let fix = write_fixture(dir.path());
    let graph = build_graph(&fix, dir.path());

    let index = dir.path().join("corpus.idx");
    ok(&bin()
        .arg("build-lexical")
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--output")
        .arg(&index)
        .output()
        .unwrap());
    let fresh_bytes = fs::read(&index).unwrap();

    // Grow the corpus behind the cache's back.
    let mut text = fs::read_to_string(&fix.corpus).unwrap();
    text.push_str("d200\tbrand new document w1 w2\n");
    fs::write(&fix.corpus, text).unwrap();

    let out = bin()
        .args(["search", "--algo", "proactive", "--n", "5", "--k", "4"])
        .args(["--depth", "50"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--queries")
        .arg(&fix.queries)
        .arg("--query-vectors")
        .arg(&fix.query_vectors)
        .arg("--graph")
        .arg(&graph)
        .arg("--index")
        .arg(&index)
        .arg("--output")
        .arg(dir.path().join("y.run"))
        .output()
        .unwrap();
    // The 201-doc corpus no longer matches the 200-row vector store.
    assert_eq!(code(&out), 1);

    // Re-aligning the vectors lets the search proceed and refresh the cache.
    let mut rng = Lcg(7);
    let rows: Vec<Vec<f32>> = (0..201).map(|_| (0..8).map(|_| rng.pm()).collect()).collect();
    save_vectors(&VectorStore::from_rows(rows).unwrap(), &fix.vectors).unwrap();
    let graph = build_graph(&fix, dir.path());
    let out = bin()
        .args(["search", "--algo", "proactive", "--n", "5", "--k", "4"])
        .args(["--depth", "50"])
        .arg("--corpus")
        .arg(&fix.corpus)
        .arg("--vectors")
        .arg(&fix.vectors)
        .arg("--queries")
        .arg(&fix.queries)
        .arg("--query-vectors")
        .arg(&fix.query_vectors)
        .arg("--graph")
        .arg(&graph)
        .arg("--index")
        .arg(&index)
        .arg("--output")
        .arg(dir.path().join("z.run"))
        .output()
        .unwrap();
    ok(&out);
    assert_ne!(
        fs::read(&index).unwrap(),
        fresh_bytes,
        "stale cache must be rewritten for the grown corpus"
    );
}
