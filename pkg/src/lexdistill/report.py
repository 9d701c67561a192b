"""Render evaluation reports to files: delimited per-query metrics plus
matplotlib figures summarising the same numbers."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import mean_of  # noqa: E402


def write_metrics_tsv(report: Dict[str, Dict[str, Optional[float]]],
                      path: str | Path) -> None:
    """One row per query, one column per metric; skipped queries get NA."""
    metrics = list(report)
    qids = sorted({q for m in report.values() for q in m})
    with open(path, "w", encoding="utf-8") as f:
        f.write("query_id\t" + "\t".join(metrics) + "\n")
        for qid in qids:
            cells = [report[m].get(qid) for m in metrics]
            f.write(qid + "\t" + "\t".join(
                "NA" if c is None else f"{c:.6f}" for c in cells) + "\n")
        means = [mean_of(report[m]) for m in metrics]
        f.write("mean\t" + "\t".join(
            "NA" if m is None else f"{m:.6f}" for m in means) + "\n")


def render_metric_figures(report: Dict[str, Dict[str, Optional[float]]],
                          out_dir: str | Path) -> list:
    """Per-metric bar charts over queries, written as PNGs. Returns the
    paths created."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created = []
    for metric, per_query in report.items():
        qids = sorted(q for q, v in per_query.items() if v is not None)
        if not qids:
            continue
        values = [per_query[q] for q in qids]
        mean = mean_of(per_query)
        fig, ax = plt.subplots(figsize=(max(6, 0.18 * len(qids)), 4))
        ax.bar(range(len(qids)), values, color="#4878a8")
        ax.axhline(mean, color="#c44e52", linestyle="--", linewidth=1,
                   label=f"mean = {mean:.4f}")
        ax.set_xticks(range(len(qids)))
        ax.set_xticklabels(qids, rotation=90, fontsize=6)
        ax.set_ylabel(metric)
        ax.set_xlabel("query")
        ax.legend(loc="lower right")
        fig.tight_layout()
        path = out_dir / f"{metric}_per_query.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        created.append(path)
    return created


def write_report(report: Dict[str, Dict[str, Optional[float]]],
                 out_dir: str | Path) -> None:
    """Delimited metrics table plus figures, side by side in out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_tsv(report, out_dir / "metrics.tsv")
    render_metric_figures(report, out_dir)
