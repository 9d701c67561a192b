"""Query-time distillation of a sparse non-negative linear term-weight model.

Given a teacher's ordering of first-stage candidates, fit term weights
theta so that sum_t max(0, theta_t) * tfidf(t, d) reproduces that ordering,
using a reciprocal-rank weighted pairwise loss with escalating L1
regularisation until the model is sparse enough to execute as a query.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .index import RankedList, SparseQuery

# Pairs beyond this many candidates are restricted to those with at least
# one member in the top ranks, keeping the pair count manageable while
# preserving the top-heavy emphasis of the reciprocal-rank weights.
PAIR_RESTRICT_ABOVE = 200
PAIR_TOP_RANKS = 50


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 500
    convergence_tol: float = 1e-4
    patience: int = 10
    r_init: float = 1.0
    r_factor: float = 10.0
    sparsity_target: int = 50
    nonzero_threshold: float = 1e-6
    loss_variant: str = "softplus"  # or "linear"
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "max_epochs", "convergence_tol",
                     "patience", "r_init", "r_factor", "sparsity_target",
                     "nonzero_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.loss_variant not in ("linear", "softplus"):
            raise ValueError(f"unknown loss_variant: {self.loss_variant!r}")


@dataclass
class DistilledModel:
    """Raw parameters theta; the effective weight of a term is max(0, theta)."""

    theta: Dict[str, float]
    r_final: float = 1.0
    epochs: int = 0
    converged: bool = False
    # nonzero count observed at each convergence event, for diagnostics
    convergence_nonzeros: List[int] = field(default_factory=list)

    def effective_weights(self) -> Dict[str, float]:
        return {t: v for t, v in self.theta.items() if v > 0}

    def score(self, features: Dict[str, float]) -> float:
        return sum(max(0.0, self.theta.get(t, 0.0)) * f
                   for t, f in features.items())

    def to_json(self, query_id: str, lam: float, variant: str) -> str:
        return json.dumps({
            "query_id": query_id,
            "terms": dict(sorted(self.effective_weights().items())),
            "lambda": lam,
            "variant": variant,
            "r_final": self.r_final,
            "epochs": self.epochs,
        }, indent=2)


def pair_weight(rank1: int, rank2: int) -> float:
    """Reciprocal-rank difference; prioritises pairs near the top."""
    if rank1 < 1 or rank2 < 1:
        raise ValueError("ranks are 1-based")
    return 1.0 / rank1 - 1.0 / rank2


# -- vectorised internals --------------------------------------------------

def _feature_matrix(features: Dict[str, Dict[str, float]],
                    teacher_ranking: RankedList,
                    extra_terms: Sequence[str] = ()) -> Tuple[np.ndarray, List[str]]:
    """Docs in teacher-rank order x sorted term vocabulary."""
    doc_ids = teacher_ranking.doc_ids()
    missing = [d for d in doc_ids if d not in features]
    if missing:
        raise KeyError(f"no feature vector for doc(s): {missing[:5]}")
    vocab = set(extra_terms)
    for d in doc_ids:
        vocab.update(features[d])
    terms = sorted(vocab)
    t_idx = {t: i for i, t in enumerate(terms)}
    mat = np.zeros((len(doc_ids), len(terms)))
    for i, d in enumerate(doc_ids):
        for t, v in features[d].items():
            mat[i, t_idx[t]] = v
    return mat, terms


def _pair_weights(n: int, variant: str) -> np.ndarray:
    """Upper-triangular matrix W[i, j] = 1/(i+1) - 1/(j+1) for i < j.

    Rows are teacher ranks (0-based). For long softplus rankings, pairs
    where both members rank below PAIR_TOP_RANKS are zeroed.
    """
    rr = 1.0 / np.arange(1, n + 1)
    w = np.triu(rr[:, None] - rr[None, :], k=1)
    if variant == "softplus" and n > PAIR_RESTRICT_ABOVE:
        w[PAIR_TOP_RANKS:, :] = 0.0
    return w


def _data_loss_and_coefs(scores: np.ndarray, w: np.ndarray,
                         variant: str) -> Tuple[float, np.ndarray]:
    """Pairwise data loss plus per-document gradient coefficients c with
    d(data_loss)/d(scores) = c."""
    margins = scores[None, :] - scores[:, None]  # margins[i, j] = O_j - O_i
    if variant == "linear":
        loss = float(np.sum(w * margins))
        g = w
    else:
        loss = float(np.sum(w * np.logaddexp(0.0, margins)))
        g = w * expit(margins)
    coefs = g.sum(axis=0) - g.sum(axis=1)
    return loss, coefs


def distill_loss(model: DistilledModel, features: Dict[str, Dict[str, float]],
                 teacher_ranking: RankedList, variant: str = "softplus",
                 r: float = 1.0) -> Dict[str, float]:
    """Pairwise preference loss of the model against the teacher ordering.

    Summed over ordered pairs (D1, D2) with D1 teacher-ranked above D2,
    weighted by their reciprocal-rank difference; plus r * ||theta||_1.
    """
    mat, terms = _feature_matrix(features, teacher_ranking)
    theta = np.array([model.theta.get(t, 0.0) for t in terms])
    scores = mat @ np.maximum(theta, 0.0)
    w = _pair_weights(len(scores), variant)
    data_loss, _ = _data_loss_and_coefs(scores, w, variant)
    reg_loss = r * float(np.sum(np.abs(theta)))
    # off-vocabulary theta entries still pay the L1 penalty
    reg_loss += r * sum(abs(v) for t, v in model.theta.items() if t not in set(terms))
    return {"data_loss": data_loss, "reg_loss": reg_loss,
            "total": data_loss + reg_loss}


def loss_gradient(model: DistilledModel, features: Dict[str, Dict[str, float]],
                  teacher_ranking: RankedList, variant: str = "softplus",
                  r: float = 1.0) -> Dict[str, float]:
    """Exact (sub)gradient of the total loss w.r.t. theta.

    ReLU subgradient at 0 is 0, and so is the L1 subgradient at 0: a term
    at exactly zero receives no update from either component.
    """
    mat, terms = _feature_matrix(features, teacher_ranking,
                                 extra_terms=list(model.theta))
    theta = np.array([model.theta.get(t, 0.0) for t in terms])
    scores = mat @ np.maximum(theta, 0.0)
    w = _pair_weights(len(scores), variant)
    _, coefs = _data_loss_and_coefs(scores, w, variant)
    grad = (mat.T @ coefs) * (theta > 0) + r * np.sign(theta)
    return {t: float(g) for t, g in zip(terms, grad)}


def train_odis(features: Dict[str, Dict[str, float]],
               teacher_ranking: RankedList, config: TrainConfig,
               query_terms: Sequence[str] = ()) -> DistilledModel:
    """Fit theta by full-batch projected Adam against the teacher's ordering.

    Every candidate term (feature vocabulary plus original-query terms)
    starts at 1e-3 so all ReLU gates are open at init; the L1 term pulls
    unsupported weights back down. theta is kept in the non-negative
    orthant (negative values score identically to zero under the ReLU, so
    nothing is lost), which lets the L1 penalty produce exact zeros instead
    of oscillating across the origin. A weight parked at zero receives the
    minimum-norm subgradient: it stays at zero unless its data gradient is
    strong enough to beat the penalty rate.

    Convergence means the relative change of the total loss stays below
    `convergence_tol` for `patience` consecutive epochs. On convergence
    with more than
    `sparsity_target` nonzeros, the L1 rate is multiplied by `r_factor`
    and training continues; terminates when sparse enough or max_epochs
    is spent. Deterministic: no stochastic minibatching.
    """
    if len(teacher_ranking) < 2:
        raise ValueError("need at least 2 ranked documents to form pairs")
    mat, terms = _feature_matrix(features, teacher_ranking, extra_terms=query_terms)
    theta = np.full(len(terms), 1e-3)

    w = _pair_weights(mat.shape[0], config.loss_variant)
    r = config.r_init
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    prev_loss: Optional[float] = None
    stable_epochs = 0
    converged = False
    convergence_nonzeros: List[int] = []
    epoch = 0

    while epoch < config.max_epochs:
        epoch += 1
        scores = mat @ theta
        data_loss, coefs = _data_loss_and_coefs(scores, w, config.loss_variant)
        total = data_loss + r * float(np.sum(theta))

        data_grad = mat.T @ coefs
        # active weights feel data + penalty; zero weights only re-activate
        # when the descent direction overcomes the penalty rate
        grad = np.where(theta > 0, data_grad + r,
                        np.minimum(data_grad + r, 0.0))
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** epoch)
        v_hat = v / (1 - beta2 ** epoch)
        theta = np.maximum(
            theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps), 0.0)

        if prev_loss is not None:
            rel = abs(total - prev_loss) / max(abs(prev_loss), 1e-12)
            stable_epochs = stable_epochs + 1 if rel < config.convergence_tol else 0
        prev_loss = total

        if stable_epochs >= config.patience:
            nonzeros = int(np.sum(theta > config.nonzero_threshold))
            convergence_nonzeros.append(nonzeros)
            if nonzeros > config.sparsity_target:
                r *= config.r_factor
                prev_loss = None
                stable_epochs = 0
            else:
                converged = True
                break

    theta_map = {t: float(x) for t, x in zip(terms, theta) if x != 0.0}
    return DistilledModel(theta_map, r_final=r, epochs=epoch, converged=converged,
                          convergence_nonzeros=convergence_nonzeros)


def sparsify(model: DistilledModel, t: int,
             threshold: float = 1e-6) -> Optional[SparseQuery]:
    """Reduce a model to its executable query: ReLU, drop tiny weights,
    keep the t largest (lexicographic tie-break). None means the student
    collapsed to nothing."""
    if t <= 0:
        raise ValueError("t must be positive")
    weights = {term: v for term, v in model.theta.items() if v > threshold}
    if not weights:
        return None
    kept = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:t]
    return SparseQuery(dict(kept), provenance="distilled")


def merge_query(original: SparseQuery, distilled: SparseQuery,
                lam: float) -> SparseQuery:
    """Convex combination of the L1-normalised original and new-term queries."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    merged: Dict[str, float] = {}
    for t, v in original.l1_normalised().items():
        merged[t] = merged.get(t, 0.0) + (1.0 - lam) * v
    for t, v in distilled.l1_normalised().items():
        merged[t] = merged.get(t, 0.0) + lam * v
    merged = {t: v for t, v in merged.items() if v > 0}
    return SparseQuery(merged, provenance="merged")
