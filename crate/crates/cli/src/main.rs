//! `ladr` — build indexes and proximity graphs, run seeded dense retrieval,
//! and evaluate or benchmark the results.
//!
//! Every subcommand is deterministic for fixed inputs and flags (bench
//! timings aside): randomized steps take `--seed`, ties break on document
//! id, and output files are written in canonical order. Logging is
//! controlled by the `LADR_LOG` environment variable (`error`..`trace`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ladr_core::*;

/// Flag combinations clap can't express (cross-flag requirements); reported
/// on stderr and mapped to exit code 2, like clap's own usage errors.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "ladr",
    version,
    about = "Lexically seeded graph exploration over dense document vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the inverted-index cache for a corpus.
    BuildLexical(BuildLexicalArgs),
    /// Build a document proximity graph.
    BuildGraph(BuildGraphArgs),
    /// Rank queries and write a TREC run file.
    Search(SearchArgs),
    /// Score a run file against relevance judgments.
    Eval(EvalArgs),
    /// Time one search configuration, query by query.
    Bench(BenchArgs),
    /// Run a parameter grid and emit one CSV row per configuration.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Proactive,
    Adaptive,
    Rerank,
    Exhaustive,
}

/// Exhaustive ranks every document regardless of (n, k, c), so sweeping it
/// is meaningless; the grid accepts the seeded algorithms only.
#[derive(Clone, Copy, ValueEnum)]
enum SweepAlgo {
    Proactive,
    Adaptive,
    Rerank,
}

impl From<SweepAlgo> for Algo {
    fn from(a: SweepAlgo) -> Algo {
        match a {
            SweepAlgo::Proactive => Algo::Proactive,
            SweepAlgo::Adaptive => Algo::Adaptive,
            SweepAlgo::Rerank => Algo::Rerank,
        }
    }
}

fn algo_name(a: Algo) -> &'static str {
    match a {
        Algo::Proactive => "proactive",
        Algo::Adaptive => "adaptive",
        Algo::Rerank => "rerank",
        Algo::Exhaustive => "exhaustive",
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Approx,
    Bm25,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimilarityArg {
    Dot,
    Cosine,
}

impl From<SimilarityArg> for Similarity {
    fn from(s: SimilarityArg) -> Similarity {
        match s {
            SimilarityArg::Dot => Similarity::Dot,
            SimilarityArg::Cosine => Similarity::Cosine,
        }
    }
}

#[derive(Args)]
struct ScoringArgs {
    /// BM25 term-frequency saturation.
    #[arg(long, default_value_t = 0.9)]
    bm25_k1: f64,
    /// BM25 length normalization.
    #[arg(long, default_value_t = 0.4)]
    bm25_b: f64,
    #[arg(long, value_enum, default_value = "dot")]
    similarity: SimilarityArg,
    /// Scalar type for vectors and score accumulation.
    #[arg(long, value_enum, default_value = "f32")]
    precision: Precision,
}

#[derive(Args)]
struct ParamArgs {
    /// Lexical seed count.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Neighbors expanded per seed (capped by the graph's k).
    #[arg(long, default_value_t = 128)]
    k: usize,
    /// Adaptive frontier width: top-c documents expanded per round
    /// (capped at n).
    #[arg(long, default_value_t = 50)]
    c: usize,
    /// Result list depth.
    #[arg(long, default_value_t = 1000)]
    depth: usize,
    /// Per-query wall-clock budget for the adaptive loop, in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Args)]
struct CorpusInputs {
    /// Corpus file: TSV `id<TAB>text` or JSONL `{"id":..,"text":..}`.
    #[arg(long)]
    corpus: PathBuf,
    /// Document vector file.
    #[arg(long)]
    vectors: PathBuf,
    /// Query texts, TSV `qid<TAB>text`.
    #[arg(long)]
    queries: PathBuf,
    /// Query vector file; row i belongs to line i of --queries.
    #[arg(long)]
    query_vectors: PathBuf,
    /// Proximity graph; required by proactive and adaptive.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Inverted-index cache; rebuilt and rewritten when missing or stale.
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Args)]
struct BuildLexicalArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output index cache, keyed to the corpus file's checksum.
    #[arg(long)]
    output: PathBuf,
    /// Worker threads for tokenization; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BuildGraphArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Document vector file; required by exact and approx.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Corpus file; required by bm25.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Index cache to reuse or refresh (bm25 only).
    #[arg(long)]
    index: Option<PathBuf>,
    /// Neighbors kept per document.
    #[arg(long, default_value_t = 128)]
    k: usize,
    /// Beam width for approx construction.
    #[arg(long, default_value_t = 64)]
    beam: usize,
    /// Pseudo-query length for bm25 construction.
    #[arg(long, default_value_t = 32)]
    m_terms: usize,
    /// Insertion-order shuffle seed for approx construction.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[command(flatten)]
    params: ParamArgs,
    /// Tag recorded in the run file; defaults to the algorithm name.
    #[arg(long)]
    run_tag: Option<String>,
    /// Output run file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Run file to score.
    #[arg(long)]
    run: PathBuf,
    /// TREC qrels: `qid 0 docno grade`.
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = 10)]
    ndcg_cutoff: usize,
    #[arg(long, default_value_t = 1000)]
    recall_cutoff: usize,
    /// Minimum grade that counts as relevant for recall.
    #[arg(long, default_value_t = 2)]
    recall_min_rel: u32,
    #[arg(long, default_value_t = 10)]
    rr_cutoff: usize,
    #[arg(long, default_value_t = 1)]
    rr_min_rel: u32,
    /// Per-query CSV destination; the summary always prints to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[command(flatten)]
    params: ParamArgs,
    /// Untimed runs per query before measurement.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Timed runs per query; the median is kept.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Optional per-query CSV (qid,median_ms).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    algo: SweepAlgo,
    #[command(flatten)]
    inputs: CorpusInputs,
    /// Seed-count grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    /// Neighbor-count grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    k: Vec<usize>,
    /// Frontier-width grid, comma separated; each value is capped at the
    /// row's n.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    c: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    depth: usize,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Judgments for the optional mean-nDCG column.
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Persistence parameter for RBO against the exhaustive ranking.
    #[arg(long, default_value_t = 0.99)]
    rbo_p: f64,
    #[arg(long, default_value_t = 10)]
    ndcg_cutoff: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LADR_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        let code = if e.downcast_ref::<UsageError>().is_some() { 2 } else { 1 };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildLexical(a) => build_lexical_cmd(a),
        Command::BuildGraph(a) => match a.scoring.precision {
            Precision::F32 => build_graph_cmd::<f32>(a),
            Precision::F64 => build_graph_cmd::<f64>(a),
        },
        Command::Search(a) => match a.params.scoring.precision {
            Precision::F32 => search_cmd::<f32>(a),
            Precision::F64 => search_cmd::<f64>(a),
        },
        Command::Eval(a) => eval_cmd(a),
        Command::Bench(a) => match a.params.scoring.precision {
            Precision::F32 => bench_cmd::<f32>(a),
            Precision::F64 => bench_cmd::<f64>(a),
        },
        Command::Sweep(a) => match a.scoring.precision {
            Precision::F32 => sweep_cmd::<f32>(a),
            Precision::F64 => sweep_cmd::<f64>(a),
        },
    }
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

/// Loads the index cache when it exists and matches the corpus checksum;
/// otherwise builds from scratch and, if a cache path was given, rewrites it.
fn load_or_build_index(
    corpus_path: &Path,
    corpus: &Corpus,
    cache: Option<&Path>,
) -> anyhow::Result<InvertedIndex> {
    let checksum = corpus_checksum(corpus_path)?;
    if let Some(path) = cache {
        if path.exists() {
            match load_index(path) {
                Ok((index, key)) if key == checksum => {
                    log::info!("reusing index cache {}", path.display());
                    return Ok(index);
                }
                Ok(_) => log::warn!(
                    "index cache {} was built from a different corpus; rebuilding",
                    path.display()
                ),
                Err(e) => log::warn!("index cache {} unreadable ({e}); rebuilding", path.display()),
            }
        }
        let index = build_lexical_index(corpus)?;
        save_index(&index, &checksum, path)
            .with_context(|| format!("writing index cache {}", path.display()))?;
        return Ok(index);
    }
    Ok(build_lexical_index(corpus)?)
}

fn build_lexical_cmd(a: BuildLexicalArgs) -> anyhow::Result<()> {
    configure_threads(a.threads)?;
    let corpus = load_corpus(&a.corpus)
        .with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let started = Instant::now();
    let index = build_lexical_index(&corpus)?;
    let checksum = corpus_checksum(&a.corpus)?;
    save_index(&index, &checksum, &a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "indexed {} docs / {} terms in {:.2?} -> {}",
        index.doc_count(),
        index.term_count(),
        started.elapsed(),
        a.output.display()
    );
    Ok(())
}

fn build_graph_cmd<S: Scalar>(a: BuildGraphArgs) -> anyhow::Result<()> {
    configure_threads(a.threads)?;
    let sim: Similarity = a.scoring.similarity.into();
    let started = Instant::now();
    let (label, graph) = match a.method {
        Method::Exact | Method::Approx => {
            let vectors = a.vectors.as_ref().ok_or_else(|| {
                usage("--vectors is required for --method exact and --method approx")
            })?;
            let store: VectorStore<S> = load_vectors(vectors)
                .with_context(|| format!("reading vectors {}", vectors.display()))?;
            match a.method {
                Method::Exact => ("exact", build_exact_graph_with(&store, a.k, sim)?),
                _ => (
                    "approx",
                    build_approx_graph_with(&store, a.k, a.beam, a.seed, sim)?,
                ),
            }
        }
        Method::Bm25 => {
            let corpus_path = a
                .corpus
                .as_ref()
                .ok_or_else(|| usage("--corpus is required for --method bm25"))?;
            let corpus = load_corpus(corpus_path)
                .with_context(|| format!("reading corpus {}", corpus_path.display()))?;
            let index = load_or_build_index(corpus_path, &corpus, a.index.as_deref())?;
            let params = Bm25Params {
                k1: S::from_f64(a.scoring.bm25_k1),
                b: S::from_f64(a.scoring.bm25_b),
            };
            (
                "bm25",
                build_bm25_graph(&index, &corpus, a.k, a.m_terms, &params)?,
            )
        }
    };
    save_graph(&graph, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "built {label} graph over {} docs (k={}) in {:.2?} -> {}",
        graph.doc_count(),
        graph.k(),
        started.elapsed(),
        a.output.display()
    );
    Ok(())
}

struct Pipeline<S: Scalar> {
    corpus: Corpus,
    store: VectorStore<S>,
    queries: QuerySet<S>,
    graph: Option<ProximityGraph>,
    index: Option<InvertedIndex>,
}

/// Cross-flag requirements checked before any file is touched.
fn require_graph(algo: Algo, inputs: &CorpusInputs) -> anyhow::Result<()> {
    if matches!(algo, Algo::Proactive | Algo::Adaptive) && inputs.graph.is_none() {
        return Err(usage(format!(
            "--graph is required for --algo {}",
            algo_name(algo)
        )));
    }
    Ok(())
}

fn load_pipeline<S: Scalar>(inputs: &CorpusInputs, algo: Algo) -> anyhow::Result<Pipeline<S>> {
    let corpus = load_corpus(&inputs.corpus)
        .with_context(|| format!("reading corpus {}", inputs.corpus.display()))?;
    let store: VectorStore<S> = load_vectors(&inputs.vectors)
        .with_context(|| format!("reading vectors {}", inputs.vectors.display()))?;
    check_corpus_alignment(&corpus, &store)?;
    let queries: QuerySet<S> = load_queries(&inputs.queries, &inputs.query_vectors)
        .with_context(|| format!("reading queries {}", inputs.queries.display()))?;
    if let Some(q) = queries.queries.first() {
        anyhow::ensure!(
            q.vec.len() == store.dim(),
            "query vectors are {}-dimensional but document vectors are {}-dimensional",
            q.vec.len(),
            store.dim()
        );
    }
    let graph = match &inputs.graph {
        Some(path) if matches!(algo, Algo::Proactive | Algo::Adaptive) => {
            let g = load_graph(path)
                .with_context(|| format!("reading graph {}", path.display()))?;
            anyhow::ensure!(
                g.doc_count() == store.len(),
                "graph covers {} docs but the vector store has {}",
                g.doc_count(),
                store.len()
            );
            Some(g)
        }
        Some(path) => {
            log::warn!(
                "--graph {} is ignored by --algo {}",
                path.display(),
                algo_name(algo)
            );
            None
        }
        None => None,
    };
    let index = if algo == Algo::Exhaustive {
        None
    } else {
        Some(load_or_build_index(
            &inputs.corpus,
            &corpus,
            inputs.index.as_deref(),
        )?)
    };
    Ok(Pipeline {
        corpus,
        store,
        queries,
        graph,
        index,
    })
}

fn ladr_params<S: Scalar>(n: usize, k: usize, c: usize, depth: usize, timeout_ms: Option<u64>, scoring: &ScoringArgs) -> LadrParams<S> {
    // The frontier can never be wider than the seed pool, so cap c at n
    // instead of rejecting grids and defaults that mix small n with the
    // stock c; n == 0 passes through for the engine's own diagnostics.
    let c = if n == 0 { c } else { c.min(n) };
    let mut params = LadrParams::new(n, k, c)
        .with_depth(depth)
        .with_similarity(scoring.similarity.into())
        .with_bm25(Bm25Params {
            k1: S::from_f64(scoring.bm25_k1),
            b: S::from_f64(scoring.bm25_b),
        });
    if let Some(ms) = timeout_ms {
        params = params.with_timeout(Duration::from_millis(ms));
    }
    params
}

fn run_query<S: Scalar>(
    algo: Algo,
    q: &Query<S>,
    pipe: &Pipeline<S>,
    params: &LadrParams<S>,
) -> ladr_core::Result<(ScoredList<S>, SearchTrace)> {
    match algo {
        Algo::Proactive => proactive_search(
            &tokenize(&q.text),
            &q.vec,
            pipe.index.as_ref().expect("index is loaded for seeded algos"),
            pipe.graph.as_ref().expect("graph presence checked up front"),
            &pipe.store,
            params,
        ),
        Algo::Adaptive => adaptive_search(
            &tokenize(&q.text),
            &q.vec,
            pipe.index.as_ref().expect("index is loaded for seeded algos"),
            pipe.graph.as_ref().expect("graph presence checked up front"),
            &pipe.store,
            params,
        ),
        Algo::Rerank => rerank_search(
            &tokenize(&q.text),
            &q.vec,
            pipe.index.as_ref().expect("index is loaded for seeded algos"),
            &pipe.store,
            params,
        ),
        Algo::Exhaustive => {
            let started = Instant::now();
            let list = exhaustive_search_with(&q.vec, &pipe.store, params.depth, params.similarity)?;
            Ok((
                list,
                SearchTrace {
                    seeds_found: 0,
                    docs_scored: pipe.store.len(),
                    iterations: 0,
                    wall_time: started.elapsed(),
                    timed_out: false,
                },
            ))
        }
    }
}

fn search_cmd<S: Scalar>(a: SearchArgs) -> anyhow::Result<()> {
    require_graph(a.algo, &a.inputs)?;
    let pipe: Pipeline<S> = load_pipeline(&a.inputs, a.algo)?;
    let p = &a.params;
    let params = ladr_params::<S>(p.n, p.k, p.c, p.depth, p.timeout_ms, &p.scoring);
    let tag = a
        .run_tag
        .clone()
        .unwrap_or_else(|| algo_name(a.algo).to_string());
    let mut run = RunFile::new(tag)?;
    let started = Instant::now();
    let mut empty = 0usize;
    for q in pipe.queries.iter() {
        let (list, trace) = run_query(a.algo, q, &pipe, &params)?;
        if trace.timed_out {
            log::warn!("query {} hit the timeout; keeping the partial ranking", q.qid);
        }
        if list.is_empty() {
            empty += 1;
            log::info!("query {} matched nothing and is omitted from the run", q.qid);
        }
        run.push_scored(q.qid.as_str(), &list, &pipe.corpus)?;
    }
    save_run(&a.output, &run).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "ranked {} queries ({} empty) in {:.2?} -> {}",
        pipe.queries.len(),
        empty,
        started.elapsed(),
        a.output.display()
    );
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> anyhow::Result<()> {
    let run = load_run(&a.run).with_context(|| format!("reading run {}", a.run.display()))?;
    let qrels =
        load_qrels(&a.qrels).with_context(|| format!("reading qrels {}", a.qrels.display()))?;
    let config = MetricConfig {
        ndcg_cutoff: a.ndcg_cutoff,
        recall_cutoff: a.recall_cutoff,
        recall_min_rel: a.recall_min_rel,
        rr_cutoff: a.rr_cutoff,
        rr_min_rel: a.rr_min_rel,
        ..MetricConfig::default()
    };
    let report = evaluate_run(&run, &qrels, &config)?;
    if let Some(path) = &a.output {
        std::fs::write(path, report.per_query_csv())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote per-query metrics -> {}", path.display());
    }
    println!("{}", report.summary());
    Ok(())
}

fn bench_cmd<S: Scalar>(a: BenchArgs) -> anyhow::Result<()> {
    require_graph(a.algo, &a.inputs)?;
    let pipe: Pipeline<S> = load_pipeline(&a.inputs, a.algo)?;
    let p = &a.params;
    let params = ladr_params::<S>(p.n, p.k, p.c, p.depth, p.timeout_ms, &p.scoring);
    let stats = bench(
        &pipe.queries,
        |q| run_query(a.algo, q, &pipe, &params),
        a.warmup,
        a.reps,
    )?;
    if let Some(path) = &a.output {
        let mut csv = String::from("qid,median_ms\n");
        for (q, ms) in pipe.queries.iter().zip(&stats.per_query_ms) {
            csv.push_str(&format!("{},{:.6}\n", q.qid, ms));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote per-query latencies -> {}", path.display());
    }
    println!("algo:             {}", algo_name(a.algo));
    println!("queries:          {}", pipe.queries.len());
    println!("warmup/reps:      {}/{}", a.warmup, a.reps);
    println!("mean latency:     {:.3} ms", stats.mean_ms);
    println!("median latency:   {:.3} ms", stats.median_ms);
    println!("p95 latency:      {:.3} ms", stats.p95_ms);
    println!("mean docs scored: {:.1}", stats.mean_docs_scored);
    Ok(())
}

fn sweep_cmd<S: Scalar>(a: SweepArgs) -> anyhow::Result<()> {
    let algo: Algo = a.algo.into();
    require_graph(algo, &a.inputs)?;
    for (flag, list) in [("--n", &a.n), ("--k", &a.k), ("--c", &a.c)] {
        if list.is_empty() {
            return Err(usage(format!("{flag} needs at least one value")));
        }
    }
    let pipe: Pipeline<S> = load_pipeline(&a.inputs, algo)?;
    let qrels = a
        .qrels
        .as_ref()
        .map(|p| load_qrels(p).with_context(|| format!("reading qrels {}", p.display())))
        .transpose()?;
    // The exhaustive reference ranking, computed once and shared by every
    // grid point.
    let truth: Vec<Vec<DocId>> = pipe
        .queries
        .iter()
        .map(|q| {
            exhaustive_search_with(&q.vec, &pipe.store, a.depth, a.scoring.similarity.into())
                .map(|l| l.ids().collect())
        })
        .collect::<ladr_core::Result<_>>()?;
    let mut csv = String::from("algo,n,k,c,depth,mean_rbo,mean_ndcg,mean_latency_ms,mean_docs_scored\n");
    let mut rows = 0usize;
    for &n in &a.n {
        for &k in &a.k {
            for &c in &a.c {
                let params = ladr_params::<S>(n, k, c, a.depth, a.timeout_ms, &a.scoring);
                let mut run = RunFile::new("sweep")?;
                let (mut sum_rbo, mut sum_ms, mut sum_docs) = (0.0f64, 0.0f64, 0.0f64);
                for (q, t) in pipe.queries.iter().zip(&truth) {
                    let started = Instant::now();
                    let (list, trace) = run_query(algo, q, &pipe, &params)?;
                    sum_ms += started.elapsed().as_secs_f64() * 1e3;
                    sum_docs += trace.docs_scored as f64;
                    let ids: Vec<DocId> = list.ids().collect();
                    sum_rbo += rbo(&ids, t, a.rbo_p)?;
                    if qrels.is_some() {
                        run.push_scored(q.qid.as_str(), &list, &pipe.corpus)?;
                    }
                }
                let nq = pipe.queries.len() as f64;
                let ndcg_cell = match &qrels {
                    Some(qr) => {
                        let config = MetricConfig {
                            ndcg_cutoff: a.ndcg_cutoff,
                            ..MetricConfig::default()
                        };
                        let report = evaluate_run(&run, qr, &config)?;
                        report
                            .mean_ndcg
                            .map(|v| format!("{v:.6}"))
                            .unwrap_or_default()
                    }
                    None => String::new(),
                };
                // params.c is the effective (capped) frontier width.
                csv.push_str(&format!(
                    "{},{n},{k},{},{},{:.6},{ndcg_cell},{:.6},{:.1}\n",
                    algo_name(algo),
                    params.c,
                    a.depth,
                    sum_rbo / nq,
                    sum_ms / nq,
                    sum_docs / nq
                ));
                rows += 1;
            }
        }
    }
    match &a.output {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {rows} sweep rows -> {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
