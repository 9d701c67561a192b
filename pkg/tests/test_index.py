import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexdistill.index import (Document, RankedList, SparseQuery, bm25_idf,
                              bm25_retrieve, build_index,
                              execute_sparse_query, tfidf_vector,
                              tfidf_weight, tokenize, BM25_B, BM25_K1)


# -- independent brute-force scorers (kept free of postings traversal) -----

def brute_bm25(corpus, query_weights, k):
    tokens = {d.doc_id: tokenize(d.text) for d in corpus}
    n = len(corpus)
    avgdl = sum(len(t) for t in tokens.values()) / n
    df = {}
    for toks in tokens.values():
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    scores = {}
    for d in corpus:
        s = 0.0
        dl = len(tokens[d.doc_id])
        for term, qw in query_weights.items():
            tf = tokens[d.doc_id].count(term)
            if tf == 0:
                continue
            idf = math.log((n - df[term] + 0.5) / (df[term] + 0.5) + 1)
            s += qw * idf * tf * (BM25_K1 + 1) / (tf + BM25_K1 * (1 - BM25_B + BM25_B * dl / avgdl))
        if s > 0:
            scores[d.doc_id] = s
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def brute_sparse(corpus, query_weights, k):
    tokens = {d.doc_id: tokenize(d.text) for d in corpus}
    n = len(corpus)
    df = {}
    for toks in tokens.values():
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    scores = {}
    for d in corpus:
        s = 0.0
        for term, qw in query_weights.items():
            tf = tokens[d.doc_id].count(term)
            if tf:
                s += qw * (1 + math.log(tf)) * math.log((n + 1) / (df[term] + 1))
        if s > 0:
            scores[d.doc_id] = s
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_and_stopwords(self):
        assert tokenize("The RBO-score, p=0.99") == ["rbo", "score", "p", "0", "99"]

    def test_case_folding(self):
        assert tokenize("Hello hello HELLO") == ["hello"] * 3


class TestBuildIndex:
    def test_single_doc_counts(self):
        idx = build_index([Document("d1", "apple banana apple")])
        assert idx.stats.n_docs == 1
        assert idx.stats.df == {"apple": 1, "banana": 1}
        assert idx.direct["d1"]["apple"] == 2
        assert idx.stats.avgdl == 3

    def test_empty_corpus(self):
        idx = build_index([])
        assert idx.stats.n_docs == 0
        assert idx.inverted == {}

    def test_disjoint_vocabularies(self):
        idx = build_index([Document("a", "x y"), Document("b", "z w")])
        assert all(len(p) == 1 for p in idx.inverted.values())

    def test_duplicate_doc_id_rejected(self):
        docs = [Document("d1", "a"), Document("d1", "b")]
        with pytest.raises(ValueError, match="d1"):
            build_index(docs)

    def test_transpose_property(self, tiny_index):
        rebuilt = {}
        for term, postings in tiny_index.inverted.items():
            for doc_id, tf in postings:
                rebuilt.setdefault(doc_id, {})[term] = tf
        assert rebuilt == tiny_index.direct
        for term, postings in tiny_index.inverted.items():
            assert tiny_index.stats.df[term] == len(postings)
            assert [d for d, _ in postings] == sorted(d for d, _ in postings)

    def test_order_independence(self, tiny_corpus):
        a = build_index(tiny_corpus)
        b = build_index(list(reversed(tiny_corpus)))
        assert a.inverted == b.inverted
        assert a.direct == b.direct


class TestBM25:
    def test_absent_term(self, tiny_index):
        out = bm25_retrieve(tiny_index, SparseQuery({"zebra": 1.0}), 5)
        assert out.entries == []

    def test_tf_monotone(self):
        idx = build_index([Document("lo", "x y z"), Document("hi", "x x x")])
        out = bm25_retrieve(idx, SparseQuery({"x": 1.0}), 2)
        assert out.doc_ids()[0] == "hi"

    def test_matches_brute_force(self, tiny_corpus, tiny_index):
        q = {"apple": 1.0, "cherry": 2.0}
        got = bm25_retrieve(tiny_index, SparseQuery(q), 5)
        expected = brute_bm25(tiny_corpus, q, 5)
        assert got.doc_ids() == [d for d, _ in expected]
        for (_, s1), (_, s2) in zip(got.entries, expected):
            assert s1 == pytest.approx(s2, abs=1e-12)

    def test_k_zero_rejected(self, tiny_index):
        with pytest.raises(ValueError):
            bm25_retrieve(tiny_index, SparseQuery({"apple": 1.0}), 0)


class TestSparseExecution:
    def test_single_term_ranks_by_tfidf(self, tiny_index):
        out = execute_sparse_query(tiny_index, SparseQuery({"cherry": 1.0}), 5)
        feats = {d: tfidf_vector(tiny_index, d).get("cherry", 0.0)
                 for d in out.doc_ids()}
        assert out.doc_ids() == sorted(feats, key=lambda d: (-feats[d], d))

    def test_matches_brute_force(self, tiny_corpus, tiny_index):
        q = {"apple": 0.5, "banana": 1.5, "date": 2.0}
        got = execute_sparse_query(tiny_index, SparseQuery(q), 5)
        expected = brute_sparse(tiny_corpus, q, 5)
        assert got.doc_ids() == [d for d, _ in expected]
        for (_, s1), (_, s2) in zip(got.entries, expected):
            assert s1 == pytest.approx(s2, abs=1e-12)

    @given(c=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=25, deadline=None)
    def test_positive_scaling_invariance(self, tiny_index, c):
        q1 = SparseQuery({"apple": 1.0, "cherry": 2.0})
        q2 = SparseQuery({t: c * w for t, w in q1.weights.items()})
        a = execute_sparse_query(tiny_index, q1, 5)
        b = execute_sparse_query(tiny_index, q2, 5)
        assert a.doc_ids() == b.doc_ids()


class TestTfidf:
    def test_ubiquitous_term_dropped(self):
        idx = build_index([Document("d1", "x"), Document("d2", "x")])
        assert tfidf_vector(idx, "d1") == {}

    def test_hand_computed(self):
        idx = build_index([Document("d1", "apple apple banana"),
                           Document("d2", "banana"), Document("d3", "banana")])
        vec = tfidf_vector(idx, "d1")
        assert vec["apple"] == pytest.approx((1 + math.log(2)) * math.log(4 / 2))
        assert "banana" not in vec  # df == N -> zero weight, dropped

    def test_unknown_doc(self, tiny_index):
        with pytest.raises(KeyError):
            tfidf_vector(tiny_index, "nope")


class TestRankedList:
    def test_tie_break_by_doc_id(self):
        rl = RankedList.from_scores("q", {"b": 1.0, "a": 1.0, "c": 2.0})
        assert rl.doc_ids() == ["c", "a", "b"]
        rl.validate()

    def test_validate_rejects_duplicates(self):
        with pytest.raises(ValueError):
            RankedList("q", [("a", 1.0), ("a", 0.5)]).validate()


class TestSparseQuery:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            SparseQuery({"a": 0.0})

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SparseQuery({})

    def test_from_text_counts(self):
        q = SparseQuery.from_text("apple apple banana")
        assert q.weights == {"apple": 2.0, "banana": 1.0}


def test_persistence_round_trip(tiny_index, tmp_path):
    tiny_index.save(tmp_path / "idx")
    loaded = tiny_index.load(tmp_path / "idx")
    assert loaded.direct == tiny_index.direct
    assert loaded.stats.df == tiny_index.stats.df
    stats = (tmp_path / "idx" / "stats.json").read_text()
    assert '"N": 5' in stats


def test_bm25_idf_positive():
    # smoothed idf stays non-negative even for df == N
    assert bm25_idf(10, 10) > 0
    assert tfidf_weight(1, 10, 10) == 0.0
