"""The nine one-vs-all models, their persistence, and multi-label prediction."""
from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..corpus import ALL_CLASSES, LabeledSentence, PermissionClass
from ..errors import ModelFormatError, TrainingError, VersionMismatchError
from .features import SparseVector, VectorizerModel, fit_vectorizer, vectorize
from .linear import BinaryClassModel, TrainingConfig, train_binary
from .sampling import balance

FORMAT_NAME = "skilltrace-ensemble"
FORMAT_VERSION = 1


class ClassifierEnsemble:
    def __init__(self, vectorizer: VectorizerModel, models: Mapping[PermissionClass, BinaryClassModel]):
        if set(models) != set(ALL_CLASSES) or len(models) != len(ALL_CLASSES):
            missing = [str(c) for c in ALL_CLASSES if c not in models]
            raise ValueError(f"ensemble needs one model per class; missing {missing}")
        for cls, m in models.items():
            if m.target is not cls:
                raise ValueError(f"model for {cls} targets {m.target}")
            if m.weights.shape != (vectorizer.size,):
                raise ValueError(f"{cls}: weight dimension does not match vocabulary")
        self.vectorizer = vectorizer
        self.models = {c: models[c] for c in ALL_CLASSES}

    def decision_values(self, sentence: str | SparseVector) -> dict[PermissionClass, float]:
        vec = vectorize(sentence, self.vectorizer) if isinstance(sentence, str) else sentence
        return {c: m.decision(vec) for c, m in self.models.items()}

    def predict(self, sentence: str) -> frozenset[PermissionClass]:
        return frozenset(c for c, v in self.decision_values(sentence).items() if v > 0)

    def without(self, cls: PermissionClass) -> "_PartialEnsemble":
        return _PartialEnsemble(self, cls)


class _PartialEnsemble:
    """An ensemble view with one class's model removed."""

    def __init__(self, base: ClassifierEnsemble, dropped: PermissionClass):
        self.base = base
        self.dropped = dropped

    def predict(self, sentence: str) -> frozenset[PermissionClass]:
        vec = vectorize(sentence, self.base.vectorizer)
        return frozenset(c for c, m in self.base.models.items()
                         if c is not self.dropped and m.decision(vec) > 0)


def predict(sentence: str, ensemble: ClassifierEnsemble) -> frozenset[PermissionClass]:
    return ensemble.predict(sentence)


def _csr(vectors: list[SparseVector]):
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + v.indices.size
    if vectors:
        indices = np.concatenate([v.indices for v in vectors]).astype(np.int64)
        data = np.concatenate([v.values for v in vectors]).astype(np.float64)
    else:
        indices, data = np.zeros(0, dtype=np.int64), np.zeros(0)
    return indptr, indices, data


def class_rng(seed: int, cls: PermissionClass) -> np.random.Generator:
    return np.random.default_rng([seed, ALL_CLASSES.index(cls)])


def train_ensemble(corpus: list[LabeledSentence], config: TrainingConfig | None = None,
                   workers: int = 1) -> ClassifierEnsemble:
    config = config or TrainingConfig()
    for cls in ALL_CLASSES:
        if not any(cls in s.labels for s in corpus):
            raise TrainingError(f"corpus has no sentences labeled {cls}")
    vectorizer = fit_vectorizer([s.text for s in corpus], config.ngram_sizes)
    if vectorizer.size == 0:
        raise TrainingError("degenerate vocabulary: nothing to train on")
    cache: dict[str, SparseVector] = {}

    def vec(text):
        v = cache.get(text)
        if v is None:
            v = cache[text] = vectorize(text, vectorizer)
        return v

    # Balanced sets are drawn up front so the per-class rng streams do not
    # depend on scheduling.
    jobs = []
    for cls in ALL_CLASSES:
        rng = class_rng(config.rng_seed, cls)
        pairs = balance(corpus, cls, config.balance, rng)
        matrix = _csr([vec(t) for t, _ in pairs])
        labels = [y for _, y in pairs]
        jobs.append((cls, matrix, labels, rng))

    def run(job):
        cls, matrix, labels, rng = job
        return train_binary(cls, matrix, labels, vectorizer.size, config, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(run, jobs))
    else:
        models = [run(j) for j in jobs]
    return ClassifierEnsemble(vectorizer, {m.target: m for m in models})


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, size: int) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if arr.shape != (size,):
        raise ModelFormatError(f"array length {arr.size} does not match vocabulary size {size}")
    return arr


def save_ensemble(ensemble: ClassifierEnsemble, path) -> None:
    vocab = sorted(ensemble.vectorizer.vocabulary, key=ensemble.vectorizer.vocabulary.__getitem__)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "ngram_sizes": list(ensemble.vectorizer.ngram_sizes),
        "vocabulary": vocab,
        "idf": _encode(ensemble.vectorizer.idf),
        "models": [
            {"class": str(c), "bias": m.bias.hex(), "weights": _encode(m.weights)}
            for c, m in ensemble.models.items()
        ],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def load_ensemble(path) -> ClassifierEnsemble:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: model format version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        vocab = {g: i for i, g in enumerate(doc["vocabulary"])}
        idf = _decode(doc["idf"], len(vocab))
        vectorizer = VectorizerModel(vocab, idf, tuple(doc["ngram_sizes"]))
        models = {}
        for block in doc["models"]:
            cls = PermissionClass(block["class"])
            if cls in models:
                raise ModelFormatError(f"{path}: duplicate model for {cls}")
            models[cls] = BinaryClassModel(cls, _decode(block["weights"], len(vocab)),
                                           float.fromhex(block["bias"]))
        return ClassifierEnsemble(vectorizer, models)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from None


def predict_many(sentences: Iterable[str], ensemble) -> list[frozenset[PermissionClass]]:
    return [ensemble.predict(s) for s in sentences]
