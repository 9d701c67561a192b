"""FastAPI application implementing the scoring wire protocol.

Responses always cover the whole request or fail as a whole: requests
larger than the configured batch size are chunked internally and the
response is assembled only after every chunk succeeds.
"""

from __future__ import annotations

import math
import threading
from typing import List

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ServiceConfig
from .scorers import Scorer, build_scorer


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": detail})


def _validate(payload) -> str:
    if not isinstance(payload, dict):
        return "request body must be a JSON object"
    if not isinstance(payload.get("query"), str):
        return "'query' must be a string"
    docs = payload.get("docs")
    if not isinstance(docs, list):
        return "'docs' must be a list"
    for i, doc in enumerate(docs):
        if (not isinstance(doc, dict)
                or not isinstance(doc.get("doc_id"), str)
                or not isinstance(doc.get("text"), str)):
            return (f"docs[{i}] must be an object with string "
                    "'doc_id' and 'text'")
    return ""


def create_app(config: ServiceConfig, scorer: Scorer | None = None) -> FastAPI:
    app = FastAPI(title="teacher-service")
    scorer = scorer if scorer is not None else build_scorer(config)
    # model access is serialized: correctness over throughput
    inference_lock = threading.Lock()

    @app.get("/health")
    def health():
        return {"status": "ok", "model": config.model}

    @app.post("/score")
    async def score(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _bad_request("malformed JSON body")
        problem = _validate(payload)
        if problem:
            return _bad_request(problem)
        docs = [(d["doc_id"], d["text"]) for d in payload["docs"]]
        query = payload["query"]
        scores: List[float] = []
        try:
            with inference_lock:
                for start in range(0, len(docs), config.max_batch_size):
                    chunk = docs[start:start + config.max_batch_size]
                    out = scorer.score_batch(query, chunk)
                    if len(out) != len(chunk):
                        raise RuntimeError(
                            f"scorer returned {len(out)} scores for "
                            f"{len(chunk)} documents")
                    scores.extend(float(s) for s in out)
        except Exception as exc:  # model failure -> 500, never partial
            return JSONResponse(status_code=500,
                                content={"error": f"scoring failed: {exc}"})
        if not all(math.isfinite(s) for s in scores):
            return JSONResponse(status_code=500,
                                content={"error": "non-finite score produced"})
        return {"scores": scores}

    return app
