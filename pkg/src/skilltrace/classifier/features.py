"""Binary n-gram presence features with an idf layer."""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyCorpusError

log = logging.getLogger(__name__)

NGRAM_SIZES = (1, 2, 3)
MIN_DF = 2

_DISALLOWED = re.compile(r"[^a-z0-9'\-]")


def tokenize(sentence: str) -> list[str]:
    tokens = []
    for chunk in sentence.lower().split():
        chunk = _DISALLOWED.sub("", chunk).strip("'-")
        if chunk:
            tokens.append(chunk)
    return tokens


def ngrams(tokens: Sequence[str], sizes=NGRAM_SIZES) -> set[str]:
    grams = set()
    for n in sizes:
        for i in range(len(tokens) - n + 1):
            grams.add(" ".join(tokens[i:i + n]))
    return grams


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def dot(self, dense: np.ndarray) -> float:
        return float(np.dot(dense[self.indices], self.values))

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.values
        return out


_EMPTY = SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0))


class VectorizerModel:
    """Vocabulary of n-grams plus per-feature idf weights."""

    def __init__(self, vocabulary: dict[str, int], idf: np.ndarray, ngram_sizes=NGRAM_SIZES):
        if sorted(vocabulary.values()) != list(range(len(vocabulary))):
            raise ValueError("vocabulary indices must be dense 0..V-1")
        idf = np.asarray(idf, dtype=np.float64)
        if idf.shape != (len(vocabulary),):
            raise ValueError("idf length must match vocabulary size")
        if idf.size and not (np.all(np.isfinite(idf)) and np.all(idf > 0)):
            raise ValueError("idf weights must be finite and positive")
        self.vocabulary = vocabulary
        self.idf = idf
        self.ngram_sizes = tuple(ngram_sizes)

    @property
    def size(self) -> int:
        return len(self.vocabulary)

    def vectorize(self, sentence: str) -> SparseVector:
        return vectorize(sentence, self)


def idf_weight(n_docs: int, df: int) -> float:
    return math.log((1 + n_docs) / (1 + df)) + 1.0


def fit_vectorizer(texts: Sequence[str], ngram_sizes=NGRAM_SIZES, min_df=MIN_DF) -> VectorizerModel:
    """Build the vocabulary from n-grams found in at least ``min_df`` documents.

    ``texts`` may also be a sequence of objects with a ``text`` attribute.
    """
    if not texts:
        raise EmptyCorpusError("cannot fit a vectorizer on an empty corpus")
    df: dict[str, int] = {}
    for doc in texts:
        text = getattr(doc, "text", doc)
        for g in ngrams(tokenize(text), ngram_sizes):
            df[g] = df.get(g, 0) + 1
    kept = sorted(g for g, c in df.items() if c >= min_df)
    if not kept:
        log.warning("degenerate vocabulary: no n-gram occurs in %d or more documents", min_df)
    vocabulary = {g: i for i, g in enumerate(kept)}
    n = len(texts)
    idf = np.array([idf_weight(n, df[g]) for g in kept], dtype=np.float64)
    return VectorizerModel(vocabulary, idf, ngram_sizes)


def vectorize(sentence: str, model: VectorizerModel) -> SparseVector:
    grams = ngrams(tokenize(sentence), model.ngram_sizes)
    idx = sorted(model.vocabulary[g] for g in grams if g in model.vocabulary)
    if not idx:
        return _EMPTY
    indices = np.array(idx, dtype=np.int64)
    values = model.idf[indices].copy()
    values /= np.sqrt(np.dot(values, values))
    return SparseVector(indices, values)


def vectorize_many(sentences: Sequence[str], model: VectorizerModel):
    """Stack sentences into CSR arrays ``(indptr, indices, data)``."""
    indptr = np.zeros(len(sentences) + 1, dtype=np.int64)
    rows_idx, rows_val = [], []
    for i, s in enumerate(sentences):
        v = vectorize(s, model)
        rows_idx.append(v.indices)
        rows_val.append(v.values)
        indptr[i + 1] = indptr[i] + v.indices.size
    indices = np.concatenate(rows_idx) if rows_idx else np.zeros(0, dtype=np.int64)
    data = np.concatenate(rows_val) if rows_val else np.zeros(0)
    return indptr, indices.astype(np.int64), data.astype(np.float64)
