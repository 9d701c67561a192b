"""Ranking quality measures: nDCG@k, Recall@k with a minimum grade,
rank-biased overlap, overlap ratio and newly-retrieved relevant counts.

Metrics for queries with no qualifying judgments return None (a skip
signal) rather than contributing 0 to a mean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .index import RankedList


@dataclass
class MetricConfig:
    k: int = 1000
    min_rel: int = 2
    rbo_p: float = 0.99

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if not 0.0 < self.rbo_p < 1.0:
            raise ValueError("rbo_p must be in (0, 1)")


Qrels = Dict[str, Dict[str, int]]  # query_id -> doc_id -> grade; missing = 0


def read_qrels(path: str | Path) -> Qrels:
    """Parse TREC qrels lines: query_id 0 doc_id grade."""
    qrels: Qrels = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            qid, _, doc_id, grade = parts[:4]
            qrels.setdefault(qid, {})[doc_id] = int(grade)
    return qrels


def _gain(grade: int) -> float:
    return 2.0 ** grade - 1.0


def ndcg_at(run: RankedList, qrels: Qrels, k: int) -> Optional[float]:
    """Exponential-gain nDCG at depth k; None when the query has no
    positively judged document."""
    grades = qrels.get(run.query_id, {})
    judged = sorted((g for g in grades.values() if g > 0), reverse=True)
    if not judged:
        return None
    dcg = 0.0
    for rank, doc_id in enumerate(run.doc_ids()[:k], start=1):
        g = grades.get(doc_id, 0)
        if g > 0:
            dcg += _gain(g) / math.log2(rank + 1)
    ideal = sum(_gain(g) / math.log2(rank + 1)
                for rank, g in enumerate(judged[:k], start=1))
    return dcg / ideal


def recall_at(run: RankedList, qrels: Qrels, k: int,
              min_rel: int = 2) -> Optional[float]:
    """Fraction of docs with grade >= min_rel found in the top k; None when
    no such doc is judged."""
    grades = qrels.get(run.query_id, {})
    relevant = {d for d, g in grades.items() if g >= min_rel}
    if not relevant:
        return None
    found = sum(1 for d in run.doc_ids()[:k] if d in relevant)
    return found / len(relevant)


def rbo(list_a: Sequence[str], list_b: Sequence[str], p: float = 0.99) -> float:
    """Extrapolated rank-biased overlap on the evaluated prefixes.

    With agreement A_d over prefixes of depth d and D = min(|a|, |b|):
    (1 - p) * sum_{d=1..D} p^(d-1) * A_d  +  p^D * A_D.
    """
    if not list_a or not list_b:
        raise ValueError("lists must be non-empty")
    if len(set(list_a)) != len(list_a) or len(set(list_b)) != len(list_b):
        raise ValueError("lists must be duplicate-free")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    depth = min(len(list_a), len(list_b))
    seen_a: set = set()
    seen_b: set = set()
    overlap = 0
    weighted = 0.0
    agreement = 0.0
    for d in range(1, depth + 1):
        a, b = list_a[d - 1], list_b[d - 1]
        if a == b:
            overlap += 1
        else:
            if a in seen_b:
                overlap += 1
            if b in seen_a:
                overlap += 1
            seen_a.add(a)
            seen_b.add(b)
        agreement = overlap / d
        weighted += p ** (d - 1) * agreement
    return (1.0 - p) * weighted + p ** depth * agreement


def overlap_ratio(list_a: Sequence[str], list_b: Sequence[str]) -> float:
    """|set(a) & set(b)| / |set(a)|."""
    if not list_a or not list_b:
        raise ValueError("lists must be non-empty")
    sa = set(list_a)
    return len(sa & set(list_b)) / len(sa)


def new_relevant(first_stage: RankedList, prf_retrieved: RankedList,
                 qrels: Qrels, min_rel: int = 2) -> int:
    """Count of relevant docs the feedback stage found that the first
    stage missed."""
    if first_stage.query_id != prf_retrieved.query_id:
        raise ValueError("query_id mismatch")
    grades = qrels.get(first_stage.query_id, {})
    seen = set(first_stage.doc_ids())
    return sum(1 for d in prf_retrieved.doc_ids()
               if d not in seen and grades.get(d, 0) >= min_rel)


# -- report shaping --------------------------------------------------------

def mean_of(values: Dict[str, Optional[float]]) -> Optional[float]:
    """Mean over non-skipped queries."""
    present = [v for v in values.values() if v is not None]
    return sum(present) / len(present) if present else None


def report_to_json(report: Dict[str, Dict[str, Optional[float]]]) -> str:
    out = {}
    for metric, per_query in report.items():
        entry = {qid: per_query[qid] for qid in sorted(per_query)}
        entry["mean"] = mean_of(per_query)
        out[metric] = entry
    return json.dumps(out, indent=2)


def report_to_table(report: Dict[str, Dict[str, Optional[float]]]) -> str:
    """Aligned plain-text table, one row per query plus a mean row."""
    metrics = list(report)
    qids = sorted({q for m in report.values() for q in m})
    width = max([len("query_id")] + [len(q) for q in qids])
    header = "query_id".ljust(width) + "".join(f"  {m:>12}" for m in metrics)
    lines = [header]

    def fmt(v: Optional[float]) -> str:
        return f"{v:12.4f}" if v is not None else f"{'-':>12}"

    for qid in qids:
        cells = "".join(f"  {fmt(report[m].get(qid))}" for m in metrics)
        lines.append(qid.ljust(width) + cells)
    means = "".join(f"  {fmt(mean_of(report[m]))}" for m in metrics)
    lines.append("mean".ljust(width) + means)
    return "\n".join(lines)
