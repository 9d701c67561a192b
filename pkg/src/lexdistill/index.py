"""Tokenization, inverted/direct index construction and weighted-term retrieval.

The index is immutable once built: retrieval functions never mutate it, so
any number of threads may query concurrently.
"""

from __future__ import annotations

import json
import math
import pickle
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

# Short English stopword list, applied identically at index and query time.
# No single-letter entries: bare letters and digits survive tokenization.
STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

BM25_K1 = 1.2
BM25_B = 0.75


def tokenize(text: str) -> List[str]:
    """Lowercase, split on non-alphanumerics, drop stopwords. No stemming."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in STOPWORDS]


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass
class SparseQuery:
    """Non-negative term->weight map executable against the inverted index."""

    weights: Dict[str, float]
    provenance: str = "original"

    def __post_init__(self):
        if not self.weights:
            raise ValueError("SparseQuery requires at least one term")
        bad = {t: w for t, w in self.weights.items() if not w > 0}
        if bad:
            raise ValueError(f"SparseQuery weights must be > 0, got {bad}")

    @classmethod
    def from_text(cls, text: str) -> "SparseQuery":
        counts = Counter(tokenize(text))
        if not counts:
            raise ValueError(f"query text tokenizes to nothing: {text!r}")
        return cls({t: float(c) for t, c in counts.items()}, provenance="original")

    def l1_normalised(self) -> Dict[str, float]:
        total = sum(self.weights.values())
        return {t: w / total for t, w in self.weights.items()}


@dataclass
class RankedList:
    """Ordered scored document list. Ranks are 1-based and implicit in order.

    Invariants: scores non-increasing, doc_ids unique, ties broken by
    ascending doc_id so identical inputs always produce identical output.
    """

    query_id: str
    entries: List[Tuple[str, float]] = field(default_factory=list)

    @classmethod
    def from_scores(cls, query_id: str, scores: Dict[str, float],
                    k: int | None = None) -> "RankedList":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        if k is not None:
            ordered = ordered[:k]
        return cls(query_id, [(d, float(s)) for d, s in ordered])

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def doc_ids(self) -> List[str]:
        return [d for d, _ in self.entries]

    def ranks(self) -> Dict[str, int]:
        return {d: i + 1 for i, (d, _) in enumerate(self.entries)}

    def validate(self) -> None:
        ids = self.doc_ids()
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate doc_ids in RankedList")
        for (d1, s1), (d2, s2) in zip(self.entries, self.entries[1:]):
            if s2 > s1:
                raise ValueError("scores must be non-increasing")
            if s2 == s1 and d2 < d1:
                raise ValueError("ties must be broken by ascending doc_id")


@dataclass
class IndexStats:
    n_docs: int
    avgdl: float
    df: Dict[str, int]
    doclen: Dict[str, int]


@dataclass
class Index:
    """Direct index (doc -> term counts), inverted index (term -> postings)
    and corpus statistics. Postings are (doc_id, tf) sorted by doc_id."""

    direct: Dict[str, Dict[str, int]]
    inverted: Dict[str, List[Tuple[str, int]]]
    stats: IndexStats

    # -- persistence ------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "index.pkl", "wb") as f:
            pickle.dump(self, f, protocol=pickle.HIGHEST_PROTOCOL)
        with open(directory / "stats.json", "w") as f:
            json.dump({"N": self.stats.n_docs, "avgdl": self.stats.avgdl}, f, indent=2)

    @classmethod
    def load(cls, directory: str | Path) -> "Index":
        with open(Path(directory) / "index.pkl", "rb") as f:
            index = pickle.load(f)
        if not isinstance(index, cls):
            raise ValueError(f"{directory} does not contain a saved index")
        return index


def build_index(corpus: Iterable[Document]) -> Index:
    """Build direct + inverted indexes. Output is independent of corpus order."""
    direct: Dict[str, Dict[str, int]] = {}
    doclen: Dict[str, int] = {}
    for doc in corpus:
        if doc.doc_id in direct:
            raise ValueError(f"duplicate doc_id: {doc.doc_id!r}")
        tokens = tokenize(doc.text)
        direct[doc.doc_id] = dict(Counter(tokens))
        doclen[doc.doc_id] = len(tokens)

    inverted: Dict[str, List[Tuple[str, int]]] = {}
    for doc_id in sorted(direct):
        for term, tf in direct[doc_id].items():
            inverted.setdefault(term, []).append((doc_id, tf))

    df = {term: len(postings) for term, postings in inverted.items()}
    n = len(direct)
    avgdl = sum(doclen.values()) / n if n else 0.0
    return Index(direct, inverted, IndexStats(n, avgdl, df, doclen))


def read_corpus(path: str | Path) -> Iterable[Document]:
    """Stream a JSON-lines corpus of {"doc_id": ..., "text": ...} objects."""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            yield Document(obj["doc_id"], obj["text"])


# -- scoring ---------------------------------------------------------------

def bm25_idf(n_docs: int, df: int) -> float:
    return math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)


def bm25_retrieve(index: Index, query: SparseQuery, k: int) -> RankedList:
    """Top-k BM25 over the inverted index (k1=1.2, b=0.75, smoothed idf).

    Query term weights multiply the per-term contributions. Only documents
    containing at least one query term are scored.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    stats = index.stats
    scores: Dict[str, float] = {}
    for term in sorted(query.weights):
        postings = index.inverted.get(term)
        if not postings:
            continue
        qw = query.weights[term]
        idf = bm25_idf(stats.n_docs, stats.df[term])
        for doc_id, tf in postings:
            norm = tf + BM25_K1 * (1 - BM25_B + BM25_B * stats.doclen[doc_id] / stats.avgdl)
            scores[doc_id] = scores.get(doc_id, 0.0) + qw * idf * tf * (BM25_K1 + 1) / norm
    return RankedList.from_scores("", scores, k)


def tfidf_weight(tf: int, df: int, n_docs: int) -> float:
    return (1.0 + math.log(tf)) * math.log((n_docs + 1) / (df + 1))


def tfidf_vector(index: Index, doc_id: str) -> Dict[str, float]:
    """Sparse log-tf x smoothed-idf features for one document.

    Terms present in every document get weight 0 and are dropped, so all
    emitted features are strictly positive.
    """
    if doc_id not in index.direct:
        raise KeyError(f"unknown doc_id: {doc_id!r}")
    n = index.stats.n_docs
    vec = {}
    for term, tf in index.direct[doc_id].items():
        w = tfidf_weight(tf, index.stats.df[term], n)
        if w > 0:
            vec[term] = w
    return vec


def execute_sparse_query(index: Index, query: SparseQuery, k: int) -> RankedList:
    """Score docs by the weighted sum of their TF-IDF features for the query
    terms, via postings traversal (documents without any query term are
    never touched)."""
    if k <= 0:
        raise ValueError("k must be positive")
    n = index.stats.n_docs
    scores: Dict[str, float] = {}
    for term in sorted(query.weights):
        postings = index.inverted.get(term)
        if not postings:
            continue
        df = index.stats.df[term]
        if df >= n:
            continue  # ubiquitous term: zero feature weight everywhere
        qw = query.weights[term]
        for doc_id, tf in postings:
            scores[doc_id] = scores.get(doc_id, 0.0) + qw * tfidf_weight(tf, df, n)
    return RankedList.from_scores("", scores, k)
