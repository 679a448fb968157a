//! Lexically-accelerated dense retrieval on the CPU.
//!
//! The pipeline: BM25 over an inverted index picks seed documents, a
//! precomputed document proximity graph (each document's k nearest
//! neighbors under the dense similarity) is explored outward from the
//! seeds, and only the documents actually visited are scored against the
//! dense query vector. With well-chosen parameters the visited set is a few
//! percent of the collection while the ranking stays close to what scoring
//! every vector would produce.
//!
//! Module map:
//! * [`corpus`] — documents, vector stores, queries, judgments, and their
//!   file formats.
//! * [`lexical`] — tokenizer, inverted index, BM25 seed selection.
//! * [`dense`] — similarity kernels, scored lists, exhaustive search.
//! * [`graph`] — proximity-graph construction (exact, beam-search
//!   approximate, lexical) and serialization.
//! * [`search`] — the seeded explorations: proactive (one hop), adaptive
//!   (iterate until converged), and the rerank baseline.
//! * [`eval`] — nDCG / Recall / RR / rank-biased overlap and a latency
//!   bench.
//! * [`trec`] — run-file reading and writing.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the `*F32`/`*F64` aliases below pick a precision. All rankings break
//! score ties by ascending document id, so equal inputs give byte-equal
//! outputs.

pub mod corpus;
pub mod dense;
pub mod error;
pub mod eval;
pub mod graph;
pub mod lexical;
pub mod scalar;
pub mod search;
pub mod trec;

mod bytes;
mod topk;

pub use corpus::{
    check_corpus_alignment, load_corpus, load_qrels, load_queries, load_vectors, save_vectors,
    Corpus, Doc, DocId, Qrels, Query, QuerySet, VectorStore,
};
pub use dense::{
    dense_score, exhaustive_search, exhaustive_search_with, score_set, score_set_with, ScoredDoc,
    ScoredList, Similarity,
};
pub use error::{Error, Result};
pub use eval::{
    bench, evaluate_run, ndcg, rbo, recall_at, rr_at, BenchStats, EvalReport, MetricConfig,
    QueryEval,
};
pub use graph::{
    build_approx_graph, build_approx_graph_with, build_bm25_graph, build_exact_graph,
    build_exact_graph_with, full_graph_payload_bytes, load_graph, neighbors, save_graph,
    GraphBuildConfig, GraphMethod, ProximityGraph,
};
pub use lexical::{
    build_lexical_index, corpus_checksum, lexical_top_n, load_index, save_index, tokenize,
    Bm25Params, InvertedIndex, Posting,
};
pub use scalar::Scalar;
pub use search::{
    adaptive_search, proactive_search, rerank_search, LadrParams, SearchTrace,
};
pub use trec::{load_run, save_run, RunEntry, RunFile};

pub type VectorStoreF32 = VectorStore<f32>;
pub type VectorStoreF64 = VectorStore<f64>;
pub type QuerySetF32 = QuerySet<f32>;
pub type QuerySetF64 = QuerySet<f64>;
pub type ScoredListF32 = ScoredList<f32>;
pub type ScoredListF64 = ScoredList<f64>;
pub type Bm25ParamsF32 = Bm25Params<f32>;
pub type Bm25ParamsF64 = Bm25Params<f64>;
pub type LadrParamsF32 = LadrParams<f32>;
pub type LadrParamsF64 = LadrParams<f64>;
