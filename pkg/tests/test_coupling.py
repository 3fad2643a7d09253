import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordnet.coupling import (
    CouplingConfig,
    CouplingError,
    CouplingMatrix,
    LatentSpace,
    TermDocumentMatrix,
    build_tfidf,
    choose_rank,
    cosine_matrix,
    couple,
    load_stopwords,
    preprocess,
    project_lsi,
    semantic_coupling,
    tokenize,
)
from coordnet.ingest import ArtifactId


def raw_cosines(w):
    cols = np.asarray(w, dtype=float).T
    n = np.linalg.norm(cols, axis=1)
    out = np.zeros((len(cols), len(cols)))
    for i in range(len(cols)):
        for j in range(len(cols)):
            if n[i] > 0 and n[j] > 0:
                out[i, j] = cols[i] @ cols[j] / (n[i] * n[j])
    return out


# ---------------------------------------------------------------------------
# tokenizing and preprocessing


@pytest.mark.parametrize("text", ["getUser", "get_user", "GET_USER", "get user"])
def test_identifier_split(text):
    assert tokenize(text) == ["get", "user"]


def test_tokenize_edge_cases():
    assert tokenize("") == []
    assert tokenize("x = 42 + y2k;") == []
    assert tokenize("parseHTTPResponse") == ["parse", "http", "response"]
    assert tokenize("a b 123 ok") == ["ok"]


@given(st.lists(st.from_regex(r"[a-z]{2,8}", fullmatch=True), max_size=10))
def test_tokenizer_idempotent_on_own_output(words):
    toks = tokenize(" ".join(words))
    assert tokenize(" ".join(toks)) == toks


def test_preprocess_examples():
    stop = load_stopwords()
    assert preprocess(["the", "running"], stop) == ["run"]
    assert preprocess(["user", "users"], stop) == ["user", "user"]
    assert preprocess([], stop) == []
    # C keywords are stopwords too
    assert preprocess(["int", "return", "struct", "buffer"], stop) == ["buffer"]


def test_custom_stopword_file(tmp_path):
    p = tmp_path / "stop.txt"
    p.write_text("# project specific\nfoo bar\n")
    stop = load_stopwords(str(p))
    assert stop == frozenset({"foo", "bar"})
    assert preprocess(["foo", "the"], stop) == ["the"]


# ---------------------------------------------------------------------------
# TF-IDF


def test_tfidf_global_term_frequency():
    td = build_tfidf({"d1": ["alpha", "alpha", "alpha", "beta"], "d2": ["beta", "gamma"]})
    w = dict(zip(td.terms, td.weights))
    assert w["alpha"][0] == pytest.approx(3 * math.log(2), abs=1e-15)
    assert w["alpha"][1] == 0
    # beta appears everywhere: idf vanishes
    assert np.all(w["beta"] == 0)
    # gamma: tf 1, df 1
    assert w["gamma"][1] == pytest.approx(math.log(2))


def test_tfidf_needs_two_documents():
    with pytest.raises(CouplingError):
        build_tfidf({"d1": ["a"]})


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.sampled_from(list("abcdefg")), min_size=1, max_size=12), min_size=2, max_size=6))
def test_tfidf_matches_formula(docs):
    corpus = {i: d for i, d in enumerate(docs)}
    td = build_tfidf(corpus)
    n = len(docs)
    assert np.all(td.weights >= 0)
    for ti, t in enumerate(td.terms):
        tf = sum(d.count(t) for d in docs)
        df = sum(t in d for d in docs)
        for j, d in enumerate(docs):
            expect = tf * math.log(n / df) if t in d else 0.0
            assert td.weights[ti, j] == pytest.approx(expect, abs=1e-12)


# ---------------------------------------------------------------------------
# LSI


def test_singular_values_match_gram_eigendecomposition():
    rng = np.random.default_rng(3)
    w = rng.random((4, 3))
    td = TermDocumentMatrix(list("abcd"), [0, 1, 2], w)
    space = project_lsi(td, rank=3)
    eig = np.sort(np.linalg.eigvalsh(w.T @ w))[::-1]
    assert np.allclose(space.singular_values, np.sqrt(np.clip(eig, 0, None)), atol=1e-9)
    assert np.all(np.diff(space.singular_values) <= 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_full_rank_preserves_cosines(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 9, size=2)
    w = rng.random((m, n)) * (rng.random((m, n)) < 0.6)
    if not w.any():
        w[0, 0] = 1.0
    td = TermDocumentMatrix([f"t{i}" for i in range(m)], list(range(n)), w)
    space = project_lsi(td, rank=min(m, n))
    assert np.allclose(cosine_matrix(space.doc_vectors), raw_cosines(w), atol=1e-9)


def test_identical_documents_identical_vectors():
    td = build_tfidf({"a": ["x", "y", "y"], "b": ["x", "y", "y"], "c": ["z"]})
    space = project_lsi(td)
    assert np.allclose(space.doc_vectors[0], space.doc_vectors[1])


def test_all_zero_matrix_rejected():
    td = TermDocumentMatrix(["x"], [0, 1], np.zeros((1, 2)))
    with pytest.raises(CouplingError, match="no discriminative terms"):
        project_lsi(td)


def test_energy_rank_policy():
    s = np.array([10.0, 3.0, 1.0, 0.1])
    # cumulative energy: 0.908, 0.990, 0.9999, 1
    assert choose_rank(s, energy=0.95) == 2
    assert choose_rank(s, energy=0.90) == 1
    assert choose_rank(s, energy=1.0) == 4
    assert choose_rank(s, energy=0.95, max_rank=1) == 1
    assert choose_rank(s, rank=10) == 4


def test_canonical_sign_is_deterministic():
    rng = np.random.default_rng(0)
    w = rng.random((6, 4))
    td = TermDocumentMatrix(list("abcdef"), [0, 1, 2, 3], w)
    a = project_lsi(td, rank=3)
    b = project_lsi(TermDocumentMatrix(td.terms, td.docs, w.copy()), rank=3)
    assert np.array_equal(a.doc_vectors, b.doc_vectors)
    for col in a.doc_vectors.T:
        assert col[np.argmax(np.abs(col))] > 0


# ---------------------------------------------------------------------------
# coupling


def _space(vectors):
    v = np.asarray(vectors, dtype=float)
    return LatentSpace(v.shape[1], v, np.ones(v.shape[1]), list(range(len(v))))


def test_parallel_and_orthogonal_vectors():
    phi = couple(_space([[1, 2], [2, 4], [-2, 1]])).phi
    assert phi[0, 1] == 1 and phi[0, 2] == 0 and phi[1, 2] == 0
    assert np.all(np.diag(phi) == 1)


def test_zero_vector_couples_only_with_itself():
    phi = couple(_space([[0, 0], [1, 0], [1, 0]])).phi
    assert phi.tolist() == [[1, 0, 0], [0, 1, 1], [0, 1, 1]]


def test_hand_built_three_document_corpus():
    arts = [ArtifactId("a.c", n) for n in ("read_buffer", "readBuffer2", "draw")]
    texts = {
        arts[0]: "read buffer length read buffer",
        arts[1]: "read buffer length buffer",
        arts[2]: "draw pixel color canvas",
    }
    # direct cosine on the TF-IDF columns (full rank keeps them)
    cfg = CouplingConfig(threshold=0.65, energy=1.0)
    cm = semantic_coupling(arts, texts, cfg)
    assert cm.edges() == [[0, 1]]
    stop = load_stopwords()
    td = build_tfidf({a: preprocess(tokenize(texts[a]), stop) for a in arts})
    cos = raw_cosines(td.weights)
    assert cos[0, 1] >= 0.65 and cos[0, 2] < 0.65 and cos[1, 2] < 0.65


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_symmetry_and_threshold_monotonicity(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    rng = np.random.default_rng(seed)
    space = _space(rng.normal(size=(7, 3)))
    a, b = couple(space, lo).phi, couple(space, hi).phi
    assert np.array_equal(a, a.T) and np.array_equal(b, b.T)
    assert np.all(b <= a)


def test_threshold_validation():
    with pytest.raises(ValueError):
        couple(_space([[1, 0]]), 0.0)


def test_degenerate_corpora_give_identity():
    a = [ArtifactId("x.c", "f"), ArtifactId("x.c", "g")]
    assert np.array_equal(semantic_coupling(a[:1], {}).phi, np.eye(1))
    # nothing survives preprocessing
    cm = semantic_coupling(a, {a[0]: "the and", a[1]: None})
    assert np.array_equal(cm.phi, np.eye(2))


def test_semantic_coupling_deterministic_and_dump(tmp_path):
    arts = [ArtifactId("m.c", f"f{i}") for i in range(5)]
    words = ["socket", "connect", "packet", "render", "texture", "shader"]
    rng = np.random.default_rng(7)
    texts = {a: " ".join(rng.choice(words, size=8)) for a in arts}
    one = semantic_coupling(arts, texts)
    two = semantic_coupling(arts, dict(texts))
    assert np.array_equal(one.phi, two.phi)
    p = tmp_path / "coupling.json"
    one.dump(p)
    import json

    data = json.loads(p.read_text())
    assert data["edges"] == one.edges()
    assert data["artifacts"][0] == {"file": "m.c", "name": "f0", "kind": "function"}
    assert isinstance(CouplingMatrix.identity(arts).phi, np.ndarray)
