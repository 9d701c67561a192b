"""End-to-end pipelines, synthetic collection generation and run-file
evaluation.

The distillation pipeline follows a fixed recipe per query: BM25 first
stage, budgeted teacher re-rank, student training on the teacher order,
second retrieval with the merged query, budgeted re-rank of the new
candidates, and a final list containing exactly the teacher-scored union.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from scipy import stats as scipy_stats

from .distill import TrainConfig, merge_query, sparsify, train_odis
from .evaluation import (MetricConfig, Qrels, mean_of, ndcg_at, new_relevant,
                         overlap_ratio, rbo, read_qrels, recall_at)
from .index import (Document, Index, RankedList, SparseQuery, bm25_retrieve,
                    execute_sparse_query, tfidf_vector)
from .prf import PrfConfig, bo1_expand, rm3_expand
from .scoring import ScoreBudget, ScorerInterface, rerank

METHODS = ("none", "odis", "rm3", "bo1")


@dataclass
class Query:
    query_id: str
    text: str


@dataclass
class PipelineConfig:
    method: str = "odis"
    first_stage_k: int = 500
    total_budget: int = 1000
    output_depth: int = 1000
    lam: float = 0.5
    train: TrainConfig = field(default_factory=TrainConfig)
    prf: PrfConfig = field(default_factory=PrfConfig)
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method: {self.method!r}")
        if self.first_stage_k <= 0 or self.total_budget <= 0 or self.output_depth <= 0:
            raise ValueError("depths and budget must be positive")
        if self.first_stage_k > self.total_budget:
            raise ValueError("first_stage_k must not exceed total_budget")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")


@dataclass
class PipelineResult:
    final: RankedList
    diagnostics: dict


def _finalise(query_id: str, budget: ScoreBudget, depth: int) -> RankedList:
    """Union of all teacher-scored docs, ordered by teacher score."""
    return RankedList.from_scores(query_id, dict(budget.cache), depth)


def run_odis_pipeline(index: Index, docs_by_id: Dict[str, Document],
                      query: Query, teacher: ScorerInterface,
                      config: PipelineConfig) -> PipelineResult:
    """First stage, budgeted re-rank, distil, retrieve with the merged
    student query, re-rank the union under the shared budget.

    A student that collapses to nothing degrades the query to the plain
    re-rank output and flags it; it never crashes the run.
    """
    timings: Dict[str, float] = {}
    diag: dict = {"method": "odis", "query_id": query.query_id,
                  "degraded": False, "timings": timings}
    budget = ScoreBudget(cap=config.total_budget)

    t0 = time.perf_counter()
    original = SparseQuery.from_text(query.text)
    first = bm25_retrieve(index, original, config.first_stage_k)
    first.query_id = query.query_id
    timings["first_stage"] = time.perf_counter() - t0
    diag["first_stage"] = first.entries
    if not first:
        diag["degraded"] = True
        diag["reason"] = "empty first stage"
        return PipelineResult(RankedList(query.query_id), diag)

    t0 = time.perf_counter()
    reranked = rerank(teacher, query.text, first, budget, docs_by_id)
    timings["rerank_first"] = time.perf_counter() - t0
    diag["reranked_first"] = reranked.entries

    t0 = time.perf_counter()
    features = {d: tfidf_vector(index, d) for d in reranked.doc_ids()}
    model = train_odis(features, reranked, config.train,
                       query_terms=sorted(original.weights))
    student = sparsify(model, config.train.sparsity_target,
                       config.train.nonzero_threshold)
    timings["distill"] = time.perf_counter() - t0
    diag["student"] = {
        "terms": dict(sorted(student.weights.items())) if student else {},
        "r_final": model.r_final,
        "epochs": model.epochs,
        "converged": model.converged,
        "convergence_nonzeros": model.convergence_nonzeros,
    }
    if student is None:
        diag["degraded"] = True
        diag["reason"] = "empty student"
        return PipelineResult(_finalise(query.query_id, budget,
                                        config.output_depth), diag)

    merged = merge_query(original, student, config.lam)
    diag["merged_query"] = dict(sorted(merged.weights.items()))
    return PipelineResult(
        _second_stage(index, docs_by_id, query, teacher, config, budget,
                      first, merged, diag),
        diag)


def run_baseline_pipeline(index: Index, docs_by_id: Dict[str, Document],
                          query: Query, teacher: ScorerInterface,
                          config: PipelineConfig) -> PipelineResult:
    """Same skeleton as the distillation pipeline with the training step
    replaced by RM3/Bo1 expansion over the re-ranked list, or omitted
    entirely (method=none -> plain re-rank)."""
    timings: Dict[str, float] = {}
    diag: dict = {"method": config.method, "query_id": query.query_id,
                  "degraded": False, "timings": timings}
    budget = ScoreBudget(cap=config.total_budget)

    t0 = time.perf_counter()
    original = SparseQuery.from_text(query.text)
    first = bm25_retrieve(index, original, config.first_stage_k)
    first.query_id = query.query_id
    timings["first_stage"] = time.perf_counter() - t0
    diag["first_stage"] = first.entries
    if not first:
        diag["degraded"] = True
        diag["reason"] = "empty first stage"
        return PipelineResult(RankedList(query.query_id), diag)

    t0 = time.perf_counter()
    reranked = rerank(teacher, query.text, first, budget, docs_by_id)
    timings["rerank_first"] = time.perf_counter() - t0
    diag["reranked_first"] = reranked.entries

    if config.method == "none":
        final = RankedList(query.query_id,
                           reranked.entries[:config.output_depth])
        return PipelineResult(final, diag)

    t0 = time.perf_counter()
    expander = rm3_expand if config.method == "rm3" else bo1_expand
    prf_config = PrfConfig(fb_docs=config.prf.fb_docs,
                           fb_terms=config.prf.fb_terms, lam=config.lam)
    expanded = expander(index, reranked, prf_config, original)
    timings["expand"] = time.perf_counter() - t0
    diag["expanded_query"] = dict(sorted(expanded.weights.items()))
    return PipelineResult(
        _second_stage(index, docs_by_id, query, teacher, config, budget,
                      first, expanded, diag),
        diag)


def run_pipeline(index: Index, docs_by_id: Dict[str, Document], query: Query,
                 teacher: ScorerInterface,
                 config: PipelineConfig) -> PipelineResult:
    if config.method == "odis":
        return run_odis_pipeline(index, docs_by_id, query, teacher, config)
    return run_baseline_pipeline(index, docs_by_id, query, teacher, config)


def _second_stage(index: Index, docs_by_id: Dict[str, Document], query: Query,
                  teacher: ScorerInterface, config: PipelineConfig,
                  budget: ScoreBudget, first: RankedList,
                  second_query: SparseQuery, diag: dict) -> RankedList:
    """Execute the rewritten query, re-rank its results under the shared
    budget (cached docs free) and emit the scored union."""
    timings = diag["timings"]
    t0 = time.perf_counter()
    # Retrieval depth covers the whole budget: overlapping docs cost
    # nothing, so unused first-stage budget can flow to fresh candidates.
    second = execute_sparse_query(index, second_query, config.total_budget)
    second.query_id = query.query_id
    timings["second_stage"] = time.perf_counter() - t0
    diag["second_stage"] = second.entries
    diag["second_stage_new"] = [d for d in second.doc_ids()
                                if d not in set(first.doc_ids())]

    t0 = time.perf_counter()
    if second:
        reranked_second = rerank(teacher, query.text, second, budget, docs_by_id)
        diag["reranked_second"] = reranked_second.entries
    timings["rerank_second"] = time.perf_counter() - t0
    diag["budget"] = {"cap": budget.cap, "used": budget.used}
    return _finalise(query.query_id, budget, config.output_depth)


# -- TREC-format I/O -------------------------------------------------------

def write_run(path: str | Path, lists: Sequence[RankedList],
              tag: str = "lexdistill") -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rl in sorted(lists, key=lambda r: r.query_id):
            for rank, (doc_id, score) in enumerate(rl.entries, start=1):
                f.write(f"{rl.query_id} Q0 {doc_id} {rank} {score:.8g} {tag}\n")


def read_run(path: str | Path) -> Dict[str, RankedList]:
    runs: Dict[str, List[Tuple[str, float]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            qid, _, doc_id, _, score = parts[:5]
            runs.setdefault(qid, []).append((doc_id, float(score)))
    out = {}
    for qid, entries in runs.items():
        rl = RankedList(qid, entries)
        rl.validate()
        out[qid] = rl
    return out


def read_queries(path: str | Path) -> List[Query]:
    """TSV lines: query_id <TAB> query text."""
    queries = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            qid, text = line.split("\t", 1)
            queries.append(Query(qid, text))
    return queries


# -- synthetic collections -------------------------------------------------

@dataclass
class SynthSpec:
    num_docs: int = 2000
    vocab_size: int = 5000
    num_topics: int = 20
    num_queries: int = 50
    mismatch_rate: float = 0.5
    noise_sd: float = 0.0
    seed: int = 7
    doc_len: int = 30
    core_terms_per_topic: int = 12
    syn_terms_per_topic: int = 12
    background_doc_frac: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.mismatch_rate <= 1.0:
            raise ValueError("mismatch_rate must be in [0, 1]")
        owned = self.num_topics * (self.core_terms_per_topic + self.syn_terms_per_topic)
        if owned >= self.vocab_size:
            raise ValueError("vocab too small for the topic term sets")

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthSpec":
        with open(path) as f:
            return cls(**json.load(f))


@dataclass
class SynthCollection:
    documents: List[Document]
    queries: List[Query]
    qrels: Qrels
    teacher_weights: Dict[str, float]
    noise_sd: float
    seed: int

    def write(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "corpus.jsonl", "w") as f:
            for doc in self.documents:
                f.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text}) + "\n")
        with open(out_dir / "queries.tsv", "w") as f:
            for q in self.queries:
                f.write(f"{q.query_id}\t{q.text}\n")
        with open(out_dir / "qrels.txt", "w") as f:
            for qid in sorted(self.qrels):
                for doc_id in sorted(self.qrels[qid]):
                    f.write(f"{qid} 0 {doc_id} {self.qrels[qid][doc_id]}\n")
        with open(out_dir / "teacher.json", "w") as f:
            json.dump({"weights": self.teacher_weights,
                       "noise_sd": self.noise_sd, "seed": self.seed}, f, indent=2)


def generate_synthetic(spec: SynthSpec) -> SynthCollection:
    """Topic-model collection with controlled vocabulary mismatch.

    Each topic owns a core term set and a disjoint synonym set. Relevant
    docs mix topic terms with background noise; with probability
    mismatch_rate a relevant doc has all its query-term occurrences
    replaced by topic synonyms (grade 3: lexically invisible to the raw
    query, reachable only through rewritten queries). Normal on-topic docs
    are grade 2 and always share a term with each of the topic's queries.
    The first doc of every topic is forced normal so each query keeps at
    least one lexically reachable relevant doc. Fully seeded.
    """
    rng = random.Random(spec.seed)
    terms = [f"term{i:05d}" for i in range(spec.vocab_size)]
    per_topic = spec.core_terms_per_topic + spec.syn_terms_per_topic
    core = [terms[j * per_topic: j * per_topic + spec.core_terms_per_topic]
            for j in range(spec.num_topics)]
    syn = [terms[j * per_topic + spec.core_terms_per_topic: (j + 1) * per_topic]
           for j in range(spec.num_topics)]
    background = terms[spec.num_topics * per_topic:]

    queries: List[Query] = []
    topic_query_terms: List[set] = [set() for _ in range(spec.num_topics)]
    for qi in range(spec.num_queries):
        topic = qi % spec.num_topics
        q_terms = rng.sample(core[topic], rng.choice((2, 3)))
        queries.append(Query(f"q{qi:03d}", " ".join(q_terms)))
        topic_query_terms[topic].update(q_terms)

    # decide doc roles up front so the reachability guarantee is simple
    roles: List[Tuple[Optional[int], bool]] = []  # (topic or None, mismatch)
    seen_normal = [False] * spec.num_topics
    for _ in range(spec.num_docs):
        if rng.random() < spec.background_doc_frac:
            roles.append((None, False))
            continue
        topic = rng.randrange(spec.num_topics)
        mismatch = rng.random() < spec.mismatch_rate
        if mismatch and not seen_normal[topic]:
            mismatch = False
        if not mismatch:
            seen_normal[topic] = True
        roles.append((topic, mismatch))

    documents: List[Document] = []
    qrels: Qrels = {}
    for di, (topic, mismatch) in enumerate(roles):
        doc_id = f"d{di:05d}"
        if topic is None:
            tokens = rng.choices(background, k=spec.doc_len)
        else:
            topical = core[topic] + syn[topic]
            tokens = [rng.choice(topical) if rng.random() < 0.6
                      else rng.choice(background) for _ in range(spec.doc_len)]
            # guarantee lexical contact with every query of the topic
            for q in queries:
                if int(q.query_id[1:]) % spec.num_topics == topic:
                    tokens[rng.randrange(spec.doc_len)] = rng.choice(q.text.split())
            if mismatch:
                qt = topic_query_terms[topic]
                tokens = [rng.choice(syn[topic]) if t in qt else t for t in tokens]
            grade = 3 if mismatch else 2
            for q in queries:
                if int(q.query_id[1:]) % spec.num_topics == topic:
                    qrels.setdefault(q.query_id, {})[doc_id] = grade
        documents.append(Document(doc_id, " ".join(tokens)))

    teacher_weights = {}
    for topic in range(spec.num_topics):
        for t in core[topic] + syn[topic]:
            teacher_weights[t] = 1.0 + rng.random()

    return SynthCollection(documents, queries, qrels, teacher_weights,
                           spec.noise_sd, spec.seed)


# -- run evaluation --------------------------------------------------------

def paired_t_test(a: Dict[str, float], b: Dict[str, float]) -> Dict[str, float]:
    """Two-sided paired t-test over shared queries. Zero-variance
    differences (e.g., a run against itself) report p = 1."""
    shared = sorted(set(a) & set(b))
    xs = [a[q] for q in shared]
    ys = [b[q] for q in shared]
    if len(shared) < 2 or all(x == y for x, y in zip(xs, ys)):
        return {"t": 0.0, "p": 1.0, "n": len(shared)}
    t, p = scipy_stats.ttest_rel(xs, ys)
    return {"t": float(t), "p": float(p), "n": len(shared)}


def evaluate_run(run_path: str | Path, qrels_path: str | Path,
                 config: MetricConfig = MetricConfig(),
                 ref_run_path: str | Path | None = None,
                 first_stage_path: str | Path | None = None,
                 compare_path: str | Path | None = None) -> dict:
    """Per-query and mean metrics for a TREC run, with optional RBO against
    an exhaustive reference, overlap/+Rel vs a first-stage run, and a
    paired t-test against a second run."""
    run = read_run(run_path)
    qrels = read_qrels(qrels_path)
    report: Dict[str, Dict[str, Optional[float]]] = {"ndcg": {}, "recall": {}}
    for qid, rl in sorted(run.items()):
        if qid not in qrels:
            continue
        report["ndcg"][qid] = ndcg_at(rl, qrels, config.k)
        report["recall"][qid] = recall_at(rl, qrels, config.k, config.min_rel)

    if ref_run_path is not None:
        ref = read_run(ref_run_path)
        report["rbo"] = {qid: rbo(run[qid].doc_ids(), ref[qid].doc_ids(),
                                  config.rbo_p)
                         for qid in sorted(set(run) & set(ref))}
    if first_stage_path is not None:
        stage1 = read_run(first_stage_path)
        shared = sorted(set(run) & set(stage1))
        report["overlap"] = {qid: overlap_ratio(run[qid].doc_ids(),
                                                stage1[qid].doc_ids())
                             for qid in shared}
        report["new_rel"] = {qid: float(new_relevant(stage1[qid], run[qid],
                                                     qrels, config.min_rel))
                             for qid in shared if qid in qrels}

    out = {"report": report,
           "means": {metric: mean_of(values) for metric, values in report.items()}}
    if compare_path is not None:
        other = read_run(compare_path)
        other_ndcg = {qid: ndcg_at(rl, qrels, config.k)
                      for qid, rl in other.items() if qid in qrels}
        a = {q: v for q, v in report["ndcg"].items() if v is not None}
        b = {q: v for q, v in other_ndcg.items() if v is not None}
        out["t_test_ndcg"] = paired_t_test(a, b)
    return out
