"""HTTP scoring microservice for relevance teachers.

Wire protocol:
- ``POST /score`` with ``{"query": str, "docs": [{"doc_id": str,
  "text": str}, ...]}`` returns ``{"scores": [float, ...]}`` aligned to the
  input order; all scores finite. Oversized requests are chunked internally.
- ``GET /health`` returns ``{"status": "ok", "model": "<identifier>"}``.
"""

from .config import ServiceConfig, load_config
from .scorers import MockLinearScorer, build_scorer

__all__ = ["ServiceConfig", "load_config", "MockLinearScorer", "build_scorer"]
