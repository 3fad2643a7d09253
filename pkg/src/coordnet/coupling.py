"""Semantic coupling of source artifacts.

Pipeline: identifier-aware tokenization, stopword removal and Porter
stemming, TF-IDF weighting with a *global* term frequency, latent semantic
indexing by truncated SVD, and a cosine-similarity threshold.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
from nltk.stem.porter import PorterStemmer

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.65
DEFAULT_ENERGY = 0.95
MAX_RANK = 300

_WORD_RE = re.compile(r"[A-Za-z0-9]+")
# acronym before a capitalized word, capitalized/lowercase words, acronyms, digit runs
_PART_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


class CouplingError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Split source text into lowercase identifier parts.

    ``getUser``, ``get_user`` and ``GET_USER`` all give ``['get', 'user']``.
    Tokens shorter than two characters and pure numbers are dropped.
    """
    out = []
    for word in _WORD_RE.findall(text):
        for part in _PART_RE.findall(word):
            if len(part) < 2 or part.isdigit():
                continue
            out.append(part.lower())
    return out


def _read_wordlist(text: str) -> set[str]:
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        words.update(w.lower() for w in line.split())
    return words


@lru_cache(maxsize=32)
def load_stopwords(path=None, languages: Sequence[str] = ("en", "c")) -> frozenset[str]:
    """Stopwords from ``path`` if given, else the shipped lists for ``languages``."""
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            return frozenset(_read_wordlist(fh.read()))
    words: set[str] = set()
    pkg = resources.files("coordnet") / "data"
    for lang in languages:
        name = "stopwords_en.txt" if lang == "en" else f"keywords_{lang}.txt"
        words |= _read_wordlist((pkg / name).read_text(encoding="utf-8"))
    return frozenset(words)


_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@lru_cache(maxsize=200_000)
def stem(word: str) -> str:
    return _stemmer.stem(word)


def preprocess(tokens: Sequence[str], stopwords=None) -> list[str]:
    if stopwords is None:
        stopwords = load_stopwords()
    return [stem(t) for t in tokens if t not in stopwords]


@dataclass
class TermDocumentMatrix:
    terms: list[str]
    docs: list
    weights: np.ndarray  # terms x docs


@dataclass
class LatentSpace:
    rank: int
    doc_vectors: np.ndarray  # docs x rank
    singular_values: np.ndarray
    docs: list


@dataclass
class CouplingMatrix:
    artifacts: list
    phi: np.ndarray  # 0/1, symmetric, unit diagonal

    def edges(self) -> list[list[int]]:
        i, j = np.nonzero(np.triu(self.phi, 1))
        return [[int(a), int(b)] for a, b in zip(i, j)]

    def to_json(self) -> dict:
        arts = []
        for a in self.artifacts:
            if hasattr(a, "file_path"):
                arts.append({"file": a.file_path, "name": a.artifact_name, "kind": a.kind})
            else:
                arts.append(str(a))
        return {"artifacts": arts, "edges": self.edges()}

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def identity(cls, artifacts) -> "CouplingMatrix":
        return cls(list(artifacts), np.eye(len(artifacts), dtype=np.int64))


def build_tfidf(docs: Mapping[object, Sequence[str]]) -> TermDocumentMatrix:
    """weight(t, d) = tf_t * ln(N / df_t) where t occurs in d, else 0.

    ``tf_t`` counts occurrences of t over the whole collection, not per
    document.
    """
    keys = list(docs)
    n = len(keys)
    if n < 2:
        raise CouplingError("TF-IDF/LSI needs at least two documents")
    vocab = sorted({t for k in keys for t in docs[k]})
    index = {t: i for i, t in enumerate(vocab)}
    present = np.zeros((len(vocab), n), dtype=bool)
    tf = np.zeros(len(vocab), dtype=np.float64)
    for j, k in enumerate(keys):
        for t in docs[k]:
            i = index[t]
            present[i, j] = True
            tf[i] += 1
    df = present.sum(axis=1)
    with np.errstate(divide="ignore"):
        idf = np.log(n / np.maximum(df, 1))
    weights = np.where(present, (tf * idf)[:, None], 0.0)
    return TermDocumentMatrix(vocab, keys, weights)


def choose_rank(singular_values: np.ndarray, rank: int | None = None,
                energy: float = DEFAULT_ENERGY, max_rank: int = MAX_RANK) -> int:
    s = np.asarray(singular_values, dtype=float)
    if rank is not None:
        if rank < 1:
            raise ValueError("rank must be positive")
        return min(int(rank), len(s))
    if not 0 < energy <= 1:
        raise ValueError("energy fraction must lie in (0, 1]")
    sq = s ** 2
    frac = np.cumsum(sq) / sq.sum()
    k = int(np.searchsorted(frac, energy - 1e-12) + 1)
    return max(1, min(k, max_rank, len(s)))


def project_lsi(td: TermDocumentMatrix, rank: int | None = None,
                energy: float = DEFAULT_ENERGY, max_rank: int = MAX_RANK) -> LatentSpace:
    """Truncated SVD; documents become rows of V_k * S_k.

    Each singular pair is sign-normalized so the largest-magnitude document
    loading is positive.
    """
    w = np.asarray(td.weights, dtype=np.float64)
    if w.size == 0 or not np.any(w):
        raise CouplingError("no discriminative terms")
    _, s, vt = np.linalg.svd(w, full_matrices=False)
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
    k = choose_rank(s, rank, energy, max_rank)
    vecs = (vt[:k].T * s[:k]).copy()
    return LatentSpace(k, vecs, s[:k].copy(), list(td.docs))


def cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(v, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    u = v / safe[:, None]
    cos = np.clip(u @ u.T, -1.0, 1.0)
    cos[norms == 0, :] = 0.0
    cos[:, norms == 0] = 0.0
    return cos


def couple(space: LatentSpace, threshold: float = DEFAULT_THRESHOLD) -> CouplingMatrix:
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    cos = cosine_matrix(space.doc_vectors)
    phi = (cos >= threshold).astype(np.int64)
    phi = np.maximum(phi, phi.T)
    np.fill_diagonal(phi, 1)
    return CouplingMatrix(list(space.docs), phi)


@dataclass(frozen=True)
class CouplingConfig:
    threshold: float = DEFAULT_THRESHOLD
    rank: int | None = None
    energy: float = DEFAULT_ENERGY
    max_rank: int = MAX_RANK
    stopwords_path: str | None = None
    languages: tuple = ("en", "c")


def semantic_coupling(artifacts: Sequence, texts: Mapping, config: CouplingConfig = CouplingConfig()) -> CouplingMatrix:
    """Coupling matrix over ``artifacts`` (in that order) from their texts.

    Artifacts without text, or with nothing left after preprocessing, couple
    only with themselves. Fewer than two documents, or a corpus without any
    discriminative term, gives the identity.
    """
    artifacts = list(artifacts)
    if len(artifacts) < 2:
        return CouplingMatrix.identity(artifacts)
    stop = load_stopwords(config.stopwords_path, config.languages)
    docs = {a: preprocess(tokenize(texts.get(a) or ""), stop) for a in artifacts}
    td = build_tfidf(docs)
    try:
        space = project_lsi(td, config.rank, config.energy, config.max_rank)
    except CouplingError:
        return CouplingMatrix.identity(artifacts)
    return couple(space, config.threshold)
