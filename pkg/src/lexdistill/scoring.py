"""Teacher scorers, per-query score budgets, and budgeted re-ranking.

A teacher is anything with ``score_batch(query_text, docs) -> scores``.
The expensive-model cap is enforced here: a ScoreBudget charges each
document at most once per query and caches its score, so overlapping
candidate sets between pipeline stages are free to re-score.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Protocol, Sequence, Set

import numpy as np
import requests

from .index import Document, Index, RankedList, tfidf_vector, tokenize


class ScorerInterface(Protocol):
    def score_batch(self, query: str, docs: Sequence[Document]) -> List[float]:
        ...


@dataclass
class ScoreBudget:
    """Ledger for one in-flight query. used == number of unique docs charged."""

    cap: int = 1000
    used: int = 0
    scored_ids: Set[str] = field(default_factory=set)
    cache: Dict[str, float] = field(default_factory=dict)

    @property
    def remaining(self) -> int:
        return self.cap - self.used

    def charge(self, doc_id: str, score: float) -> None:
        if doc_id in self.scored_ids:
            return
        if self.used >= self.cap:
            raise RuntimeError("score budget exceeded")
        self.scored_ids.add(doc_id)
        self.cache[doc_id] = score
        self.used += 1


def _seeded_gaussian(seed: int, doc_id: str, sd: float) -> float:
    """Deterministic noise keyed on (seed, doc_id); stable across processes."""
    if sd == 0:
        return 0.0
    digest = hashlib.blake2b(f"{seed}:{doc_id}".encode(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    return float(rng.normal(0.0, sd))


@dataclass
class HiddenLinearTeacher:
    """Test teacher: a hidden sparse linear model over the same TF-IDF
    features the student sees, so a lexical student can provably recover
    its rankings. Weights may be negative; noise is fixed by (seed, doc_id)."""

    index: Index
    weights: Dict[str, float]
    noise_sd: float = 0.0
    seed: int = 0

    def score_doc(self, doc_id: str) -> float:
        vec = tfidf_vector(self.index, doc_id)
        score = sum(w * vec[t] for t, w in self.weights.items() if t in vec)
        return score + _seeded_gaussian(self.seed, doc_id, self.noise_sd)

    def score_batch(self, query: str, docs: Sequence[Document]) -> List[float]:
        return [self.score_doc(d.doc_id) for d in docs]


@dataclass
class QrelsOracleTeacher:
    """Test teacher scoring by relevance grade, ties broken by seeded noise.

    Grade gaps dominate the noise so the score is strictly increasing in
    the grade.
    """

    qrels: Dict[str, Dict[str, int]]  # query_id -> doc_id -> grade
    query_id: str = ""
    gain_per_grade: float = 10.0
    seed: int = 0

    def score_batch(self, query: str, docs: Sequence[Document]) -> List[float]:
        grades = self.qrels.get(self.query_id, {})
        out = []
        for d in docs:
            noise = _seeded_gaussian(self.seed, d.doc_id, 1.0)
            out.append(grades.get(d.doc_id, 0) * self.gain_per_grade + noise)
        return out


def rerank(scorer: ScorerInterface, query: str, candidates: RankedList,
           budget: ScoreBudget, docs_by_id: Dict[str, Document]) -> RankedList:
    """Teacher-score candidates under the budget and sort by teacher score.

    Cached documents are free; fresh documents are charged in candidate
    order until the budget runs out, and unscored leftovers are dropped.
    Returns an empty list when nothing can be scored (never raises for
    budget exhaustion).
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    fresh: List[str] = []
    kept: List[str] = []
    for doc_id in candidates.doc_ids():
        if doc_id in budget.scored_ids:
            kept.append(doc_id)
        elif len(fresh) < budget.remaining:
            fresh.append(doc_id)
            kept.append(doc_id)
    if fresh:
        docs = [docs_by_id[d] for d in fresh]
        scores = scorer.score_batch(query, docs)
        if len(scores) != len(docs):
            raise RuntimeError("scorer returned misaligned batch")
        for doc_id, score in zip(fresh, scores):
            budget.charge(doc_id, score)
    return RankedList.from_scores(candidates.query_id,
                                  {d: budget.cache[d] for d in kept})


def exhaustive_score(scorer: ScorerInterface, query: str, index: Index,
                     docs_by_id: Dict[str, Document],
                     query_id: str = "") -> RankedList:
    """Score every document in the corpus; test-scale ground truth only."""
    doc_ids = sorted(index.direct)
    docs = [docs_by_id[d] for d in doc_ids]
    scores = scorer.score_batch(query, docs)
    return RankedList.from_scores(query_id, dict(zip(doc_ids, scores)))


# -- remote teacher client -------------------------------------------------

class RemoteScoringError(RuntimeError):
    pass


@dataclass
class RemoteTeacher:
    """Client for the HTTP scoring service (POST /score, GET /health)."""

    endpoint: str
    batch_size: int = 64
    max_retries: int = 3
    timeout: float = 60.0

    def score_batch(self, query: str, docs: Sequence[Document]) -> List[float]:
        return remote_score_batch(self.endpoint, query, docs,
                                  batch_size=self.batch_size,
                                  max_retries=self.max_retries,
                                  timeout=self.timeout)


def remote_score_batch(endpoint: str, query: str, docs: Sequence[Document],
                       batch_size: int = 64, max_retries: int = 3,
                       timeout: float = 60.0) -> List[float]:
    """POST batched scoring requests; returns scores aligned to input order.

    Transient connection failures are retried a bounded number of times;
    protocol violations (length mismatch, non-finite scores) fail hard.
    """
    if not docs:
        return []
    url = endpoint.rstrip("/") + "/score"
    out: List[float] = []
    for start in range(0, len(docs), batch_size):
        chunk = docs[start:start + batch_size]
        payload = {"query": query,
                   "docs": [{"doc_id": d.doc_id, "text": d.text} for d in chunk]}
        last_err: Exception | None = None
        for _ in range(max_retries):
            try:
                resp = requests.post(url, json=payload, timeout=timeout)
                resp.raise_for_status()
                break
            except (requests.ConnectionError, requests.Timeout) as err:
                last_err = err
        else:
            raise RemoteScoringError(
                f"scoring service unreachable after {max_retries} tries: {last_err}")
        scores = resp.json().get("scores")
        if not isinstance(scores, list) or len(scores) != len(chunk):
            raise RemoteScoringError(
                f"misaligned response for batch at offset {start}: "
                f"expected {len(chunk)} scores")
        if not all(np.isfinite(scores)):
            raise RemoteScoringError(f"non-finite score in batch at offset {start}")
        out.extend(float(s) for s in scores)
    return out
