"""Lexical pseudo-relevance feedback baselines (RM3, Bo1) and reciprocal
rank fusion.

Both expanders operate on a teacher-re-ranked list: the feedback documents
are the teacher's top results, not the raw first stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .distill import merge_query
from .index import Index, RankedList, SparseQuery


@dataclass
class PrfConfig:
    fb_docs: int = 10
    fb_terms: int = 50
    lam: float = 0.5

    def __post_init__(self):
        if self.fb_docs <= 0 or self.fb_terms <= 0:
            raise ValueError("fb_docs and fb_terms must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")


def _top_terms(weights: Dict[str, float], k: int) -> Dict[str, float]:
    kept = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return dict(kept)


def rm3_expand(index: Index, reranked: RankedList, config: PrfConfig,
               original: SparseQuery) -> SparseQuery:
    """Relevance-model expansion: P(t|R) ~ sum_d P(t|d) * softmax(score_d)
    over the top feedback docs, truncated and interpolated with the query."""
    if not reranked:
        raise ValueError("reranked list must be non-empty")
    fb = reranked.entries[:config.fb_docs]
    scores = np.array([s for _, s in fb])
    probs = np.exp(scores - scores.max())
    probs /= probs.sum()

    term_weights: Dict[str, float] = {}
    for (doc_id, _), p in zip(fb, probs):
        counts = index.direct[doc_id]
        doclen = index.stats.doclen[doc_id]
        if doclen == 0:
            continue
        for term, tf in counts.items():
            term_weights[term] = term_weights.get(term, 0.0) + float(p) * tf / doclen

    expansion = _top_terms(term_weights, config.fb_terms)
    if not expansion or config.lam == 0.0:
        return SparseQuery(original.l1_normalised(), provenance="expanded")
    expanded = SparseQuery(expansion, provenance="expanded")
    merged = merge_query(original, expanded, config.lam)
    return SparseQuery(merged.weights, provenance="expanded")


def bo1_expand(index: Index, reranked: RankedList, config: PrfConfig,
               original: SparseQuery) -> SparseQuery:
    """Bose-Einstein 1 divergence-from-randomness expansion.

    w(t) = tf_fb(t) * log2((1 + P_n) / P_n) + log2(1 + P_n) with
    P_n = collection_frequency(t) / N.
    """
    if not reranked:
        raise ValueError("reranked list must be non-empty")
    fb_ids = reranked.doc_ids()[:config.fb_docs]
    tf_fb: Dict[str, int] = {}
    for doc_id in fb_ids:
        for term, tf in index.direct[doc_id].items():
            tf_fb[term] = tf_fb.get(term, 0) + tf

    n = index.stats.n_docs
    term_weights: Dict[str, float] = {}
    for term, tf in tf_fb.items():
        cf = sum(t for _, t in index.inverted[term])
        p_n = cf / n
        w = tf * math.log2((1.0 + p_n) / p_n) + math.log2(1.0 + p_n)
        if w > 0:
            term_weights[term] = w

    expansion = _top_terms(term_weights, config.fb_terms)
    if not expansion or config.lam == 0.0:
        return SparseQuery(original.l1_normalised(), provenance="expanded")
    expanded = SparseQuery(expansion, provenance="expanded")
    merged = merge_query(original, expanded, config.lam)
    return SparseQuery(merged.weights, provenance="expanded")


def rrf_fuse(lists: Sequence[RankedList], k: int = 60,
             depth: int = 1000) -> RankedList:
    """Reciprocal rank fusion: score(d) = sum over lists of 1/(k + rank)."""
    if len(lists) < 2:
        raise ValueError("need at least 2 lists to fuse")
    qids = {rl.query_id for rl in lists}
    if len(qids) != 1:
        raise ValueError(f"mismatched query_ids: {sorted(qids)}")
    if k <= 0 or depth <= 0:
        raise ValueError("k and depth must be positive")
    scores: Dict[str, float] = {}
    for rl in lists:
        for rank, doc_id in enumerate(rl.doc_ids(), start=1):
            scores[doc_id] = scores.get(doc_id, 0.0) + 1.0 / (k + rank)
    return RankedList.from_scores(lists[0].query_id, scores, depth)
