"""Scoring backends: a stateless mock linear scorer and a lazy neural one.

The mock scorer recomputes TF-IDF features from raw document text using
corpus statistics shipped inside its weights file, so the service needs no
index access. Tokenization rules (identical to the retrieval library's):
lowercase, split on any non-alphanumeric codepoint (underscore included),
drop empty tokens and stopwords from the fixed list below, no stemming.
The feature of term t in document d is ``(1 + ln tf) * ln((N + 1)/(df + 1))``
and a document's score is the weighted sum of its features.

Weights file JSON layout::

    {
      "weights": {"term": weight, ...},
      "num_docs": N,
      "df": {"term": document-frequency, ...}   # needed for weighted terms
    }
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from pathlib import Path
from typing import List, Protocol, Sequence, Tuple

STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

Doc = Tuple[str, str]  # (doc_id, text)


def tokenize(text: str) -> List[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in STOPWORDS]


class Scorer(Protocol):
    def score_batch(self, query: str, docs: Sequence[Doc]) -> List[float]:
        """Scores aligned to the input order, one per document."""


class MockLinearScorer:
    def __init__(self, weights_file: str | Path):
        with open(weights_file) as f:
            payload = json.load(f)
        for key in ("weights", "num_docs", "df"):
            if key not in payload:
                raise ValueError(f"weights file missing {key!r}")
        self.weights = {t: float(w) for t, w in payload["weights"].items()}
        self.num_docs = int(payload["num_docs"])
        self.df = {t: int(v) for t, v in payload["df"].items()}
        missing = [t for t in self.weights if t not in self.df]
        if missing:
            raise ValueError(
                f"weights file lacks df for weighted term(s): {missing[:5]}")

    def _score(self, text: str) -> float:
        tf = Counter(tokenize(text))
        total = 0.0
        for term, weight in self.weights.items():
            count = tf.get(term, 0)
            if count == 0:
                continue
            idf = math.log((self.num_docs + 1) / (self.df[term] + 1))
            feature = (1.0 + math.log(count)) * idf
            if feature > 0:
                total += weight * feature
        return total

    def score_batch(self, query: str, docs: Sequence[Doc]) -> List[float]:
        return [self._score(text) for _, text in docs]


class NeuralScorer:
    """Cross-encoder backend; the model loads on first use so that the
    service can start (and mock-mode tests can run) without it."""

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = device
        self._model = None

    def _ensure_model(self):
        if self._model is None:
            from sentence_transformers import CrossEncoder
            self._model = CrossEncoder(self.model_id, device=self.device)
        return self._model

    def score_batch(self, query: str, docs: Sequence[Doc]) -> List[float]:
        model = self._ensure_model()
        pairs = [(query, text) for _, text in docs]
        return [float(s) for s in model.predict(pairs)]


def build_scorer(config) -> Scorer:
    if config.mode == "mock-linear":
        return MockLinearScorer(config.weights_file)
    return NeuralScorer(config.model, config.device)
