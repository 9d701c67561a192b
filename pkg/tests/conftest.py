import pytest

from lexdistill.harness import SynthSpec, generate_synthetic
from lexdistill.index import Document, build_index


@pytest.fixture(scope="session")
def tiny_corpus():
    return [
        Document("d1", "apple banana apple"),
        Document("d2", "banana cherry"),
        Document("d3", "cherry date elderberry"),
        Document("d4", "apple cherry cherry cherry"),
        Document("d5", "fig grape"),
    ]


@pytest.fixture(scope="session")
def tiny_index(tiny_corpus):
    return build_index(tiny_corpus)


@pytest.fixture(scope="session")
def dev_collection():
    """Small synthetic dev fixture shared across suites."""
    spec = SynthSpec(num_docs=400, vocab_size=2000, num_topics=5,
                     num_queries=10, mismatch_rate=0.5, seed=11)
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def dev_index(dev_collection):
    return build_index(dev_collection.documents)


@pytest.fixture(scope="session")
def dev_docs(dev_collection):
    return {d.doc_id: d for d in dev_collection.documents}


def pytest_terminal_summary(terminalreporter):
    from _criteria import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num, name, ok in sorted(RESULTS):
            status = "PASS" if ok else "FAIL"
            terminalreporter.write_line(f"[criterion {num}] {status}: {name}")
