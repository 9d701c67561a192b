import json

import pytest

from lexdistill.harness import SynthSpec, generate_synthetic
from lexdistill.index import build_index

CRITERIA = []


def record_criterion(num, name, ok):
    CRITERIA.append((num, name, bool(ok)))
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {name}")
    return bool(ok)


@pytest.fixture(scope="session")
def criterion_recorder():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria (service)")
        for num, name, ok in sorted(CRITERIA):
            status = "PASS" if ok else "FAIL"
            terminalreporter.write_line(f"[criterion {num}] {status}: {name}")


@pytest.fixture(scope="session")
def shared_fixture(tmp_path_factory):
    """500-doc collection with the teacher weights exported both as the
    retrieval library's fixture files and as a service weights file."""
    base = tmp_path_factory.mktemp("shared")
    spec = SynthSpec(num_docs=500, vocab_size=2500, num_topics=5,
                     num_queries=10, mismatch_rate=0.5, noise_sd=0.0, seed=13)
    collection = generate_synthetic(spec)
    collection.write(base)
    index = build_index(collection.documents)
    weights_file = base / "service_weights.json"
    weights_file.write_text(json.dumps({
        "weights": collection.teacher_weights,
        "num_docs": index.stats.n_docs,
        "df": {t: index.stats.df.get(t, 0)
               for t in collection.teacher_weights},
    }))
    return {"dir": base, "collection": collection, "index": index,
            "weights_file": weights_file}
