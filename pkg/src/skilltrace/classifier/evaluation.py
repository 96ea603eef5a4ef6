"""Stratified k-fold evaluation of the sentence classifier."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..corpus import ALL_CLASSES, LabeledSentence, PermissionClass
from ..errors import TrainingError
from .ensemble import _csr, train_ensemble
from .features import vectorize
from .linear import TrainingConfig


@dataclass(frozen=True)
class EvalReport:
    per_class_f1: dict[PermissionClass, float]
    per_class_accuracy: dict[PermissionClass, float]
    fold_count: int

    def rows(self):
        for c in ALL_CLASSES:
            yield c, self.per_class_f1[c], self.per_class_accuracy[c]


def binary_scores(truth: np.ndarray, pred: np.ndarray) -> tuple[float, float]:
    """F1 and accuracy for boolean arrays; F1 is 1.0 when both are all-negative."""
    tp = int(np.sum(truth & pred))
    fp = int(np.sum(~truth & pred))
    fn = int(np.sum(truth & ~pred))
    denom = 2 * tp + fp + fn
    f1 = 1.0 if denom == 0 else 2 * tp / denom
    acc = float(np.mean(truth == pred)) if truth.size else 1.0
    return f1, acc


def stratified_folds(corpus: list[LabeledSentence], k: int, rng: np.random.Generator) -> list[list[int]]:
    """Assign indices to k folds, dealing each label-set stratum round-robin."""
    strata = defaultdict(list)
    for i, s in enumerate(corpus):
        strata[tuple(sorted(str(x) for x in s.labels))].append(i)
    folds = [[] for _ in range(k)]
    offset = 0
    for key in sorted(strata):
        members = strata[key]
        perm = rng.permutation(len(members))
        for j, p in enumerate(perm):
            folds[(offset + j) % k].append(members[p])
        offset += len(members)
    return [sorted(f) for f in folds]


def cross_validate(corpus: list[LabeledSentence], config: TrainingConfig | None = None, k: int = 5,
                   workers: int = 1) -> EvalReport:
    """Train on k-1 folds (balanced), score every class on the untouched held-out fold."""
    config = config or TrainingConfig()
    if k < 2:
        raise ValueError("k must be at least 2")
    labelsets = {frozenset(s.labels) for s in corpus}
    if len(labelsets) < 2:
        raise TrainingError("single-class corpus cannot be cross-validated")
    rng = np.random.default_rng([config.rng_seed, 9001])
    folds = stratified_folds(corpus, k, rng)
    for n, fold in enumerate(folds):
        present = set().union(*(corpus[i].labels for i in fold)) if fold else set()
        missing = [str(c) for c in ALL_CLASSES if c not in present]
        if missing:
            raise TrainingError(
                f"fold {n} has no positives for {', '.join(missing)}; try a smaller k")

    f1s = {c: [] for c in ALL_CLASSES}
    accs = {c: [] for c in ALL_CLASSES}
    for n, fold in enumerate(folds):
        held = set(fold)
        train = [s for i, s in enumerate(corpus) if i not in held]
        test = [corpus[i] for i in fold]
        ensemble = train_ensemble(train, config, workers=workers)
        matrix = _csr([vectorize(s.text, ensemble.vectorizer) for s in test])
        for c in ALL_CLASSES:
            truth = np.array([c in s.labels for s in test])
            pred = ensemble.models[c].decision_csr(*matrix) > 0
            f1, acc = binary_scores(truth, pred)
            f1s[c].append(f1)
            accs[c].append(acc)
    return EvalReport(
        per_class_f1={c: float(np.mean(v)) for c, v in f1s.items()},
        per_class_accuracy={c: float(np.mean(v)) for c, v in accs.items()},
        fold_count=k,
    )
