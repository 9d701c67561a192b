"""Sparse lexical retrieval with query-time distillation of re-ranker
orderings into executable term-weight queries."""

from .distill import (DistilledModel, TrainConfig, distill_loss,
                      loss_gradient, merge_query, pair_weight, sparsify,
                      train_odis)
from .evaluation import (MetricConfig, ndcg_at, new_relevant, overlap_ratio,
                         rbo, read_qrels, recall_at)
from .harness import (PipelineConfig, PipelineResult, Query, SynthSpec,
                      evaluate_run, generate_synthetic, run_baseline_pipeline,
                      run_odis_pipeline, run_pipeline)
from .index import (Document, Index, RankedList, SparseQuery, bm25_retrieve,
                    build_index, execute_sparse_query, tfidf_vector, tokenize)
from .prf import PrfConfig, bo1_expand, rm3_expand, rrf_fuse
from .scoring import (HiddenLinearTeacher, QrelsOracleTeacher, RemoteTeacher,
                      ScoreBudget, exhaustive_score, remote_score_batch,
                      rerank)

__all__ = [
    "Document", "Index", "RankedList", "SparseQuery", "tokenize",
    "build_index", "bm25_retrieve", "execute_sparse_query", "tfidf_vector",
    "ScoreBudget", "HiddenLinearTeacher", "QrelsOracleTeacher",
    "RemoteTeacher", "rerank", "exhaustive_score", "remote_score_batch",
    "DistilledModel", "TrainConfig", "pair_weight", "distill_loss",
    "loss_gradient", "train_odis", "sparsify", "merge_query",
    "PrfConfig", "rm3_expand", "bo1_expand", "rrf_fuse",
    "MetricConfig", "ndcg_at", "recall_at", "rbo", "overlap_ratio",
    "new_relevant", "read_qrels",
    "Query", "PipelineConfig", "PipelineResult", "SynthSpec",
    "run_pipeline", "run_odis_pipeline", "run_baseline_pipeline",
    "generate_synthetic", "evaluate_run",
]
