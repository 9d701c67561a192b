"""Conformance of the service against the retrieval library's local teacher."""

import json
import socket
import subprocess
import sys
import time

import pytest
import requests
from fastapi.testclient import TestClient

from lexdistill.cli import main as lexdistill_main
from lexdistill.scoring import HiddenLinearTeacher
from teacher_service.app import create_app
from teacher_service.config import ServiceConfig


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def live_service(shared_fixture, tmp_path_factory):
    port = _free_port()
    cfg_path = tmp_path_factory.mktemp("svc") / "config.json"
    cfg_path.write_text(json.dumps({
        "mode": "mock-linear",
        "weights_file": str(shared_fixture["weights_file"]),
        "port": port,
    }))
    proc = subprocess.Popen(
        [sys.executable, "-m", "teacher_service.cli", str(cfg_path)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    url = f"http://127.0.0.1:{port}"
    try:
        deadline = time.time() + 20
        while True:
            try:
                if requests.get(f"{url}/health", timeout=1).ok:
                    break
            except requests.ConnectionError:
                pass
            if time.time() > deadline or proc.poll() is not None:
                raise RuntimeError("service failed to start")
            time.sleep(0.2)
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_criterion_9_service_conformance(shared_fixture, live_service,
                                         criterion_recorder, tmp_path):
    collection = shared_fixture["collection"]
    index = shared_fixture["index"]
    data = shared_fixture["dir"]

    # mock service scores vs the in-process linear teacher, all 500 docs
    config = ServiceConfig(mode="mock-linear",
                           weights_file=str(shared_fixture["weights_file"]))
    local = HiddenLinearTeacher(index, collection.teacher_weights,
                                noise_sd=0.0, seed=0)
    client = TestClient(create_app(config))
    docs = collection.documents
    max_err = 0.0
    for start in range(0, len(docs), 100):
        chunk = docs[start:start + 100]
        resp = client.post("/score", json={
            "query": "conformance",
            "docs": [{"doc_id": d.doc_id, "text": d.text} for d in chunk]})
        remote_scores = resp.json()["scores"]
        local_scores = local.score_batch("conformance", chunk)
        max_err = max(max_err, max(abs(a - b) for a, b
                                   in zip(remote_scores, local_scores)))
    scores_ok = max_err < 1e-5

    # end-to-end: remote-teacher pipeline run equals local-teacher run
    idx_dir = tmp_path / "idx"
    assert lexdistill_main(["index", str(data / "corpus.jsonl"),
                            str(idx_dir)]) == 0
    common = ["pipeline", "--index-dir", str(idx_dir),
              "--corpus", str(data / "corpus.jsonl"),
              "--queries", str(data / "queries.tsv"),
              "--method", "odis", "--budget", "120", "--first-stage", "60"]
    local_run = tmp_path / "local.run"
    remote_run = tmp_path / "remote.run"
    assert lexdistill_main(common + [
        "--output", str(local_run), "--teacher", "hidden-linear",
        "--teacher-weights", str(data / "teacher.json")]) == 0
    assert lexdistill_main(common + [
        "--output", str(remote_run),
        "--teacher", f"remote:{live_service}"]) == 0
    runs_ok = local_run.read_bytes() == remote_run.read_bytes()

    ok = scores_ok and runs_ok
    assert criterion_recorder(
        9, f"mock service matches local linear teacher (max err "
           f"{max_err:.2e} < 1e-5) and remote-teacher pipeline run is "
           "byte-identical to the local run", ok)
