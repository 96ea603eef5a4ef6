"""Class balancing for one-vs-all training sets."""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from ..corpus import LabeledSentence, PermissionClass
from ..errors import TrainingError
from .linear import BalanceConfig


def _stratum(sentence: LabeledSentence) -> tuple[str, ...]:
    return tuple(sorted(str(x) for x in sentence.labels))


def _resample(items: list, n: int, rng: np.random.Generator) -> list:
    """Pick ``n`` items: whole copies first, then a random subset for the remainder."""
    if not items or n <= 0:
        return []
    copies, rest = divmod(n, len(items))
    out = items * copies
    if rest:
        out.extend(items[i] for i in sorted(rng.choice(len(items), size=rest, replace=False)))
    return out


def _allocate(sizes: list[int], n: int) -> list[int]:
    """Split ``n`` across strata proportionally to ``sizes``; each stratum gets >= 1."""
    total = sum(sizes)
    if n >= total:
        return list(sizes)
    k = len(sizes)
    if n <= k:
        # Not enough room for every stratum: keep the largest ones.
        order = sorted(range(k), key=lambda i: (-sizes[i], i))
        out = [0] * k
        for i in order[:n]:
            out[i] = 1
        return out
    out = [1] * k
    budget = n - k
    spare = [s - 1 for s in sizes]
    spare_total = sum(spare)
    quotas = [budget * s / spare_total for s in spare]
    for i, q in enumerate(quotas):
        out[i] += int(math.floor(q))
    left = n - sum(out)
    remainders = sorted(range(k), key=lambda i: (-(quotas[i] - math.floor(quotas[i])), i))
    for i in remainders:
        if left == 0:
            break
        if out[i] < sizes[i]:
            out[i] += 1
            left -= 1
    return out


def target_sizes(n_pos: int, n_neg: int, config: BalanceConfig) -> tuple[int, int]:
    """Positive and negative counts after balancing."""
    floor = min(config.min_size, n_pos + n_neg)
    ratio = config.max_negative_ratio
    pos, neg = n_pos, n_neg
    if n_neg > ratio * n_pos:
        pos = max(n_pos, math.ceil(floor / (1 + ratio)))
        neg = min(n_neg, int(ratio * pos))
    elif n_neg < n_pos:
        pos = neg = n_neg
    if pos + neg > config.max_size:
        scale = config.max_size / (pos + neg)
        pos = max(1, int(pos * scale))
        neg = max(1, int(neg * scale))
    return pos, neg


def balance(corpus: list[LabeledSentence], target: PermissionClass, config: BalanceConfig,
            rng: np.random.Generator) -> list[tuple[str, int]]:
    positives = [s for s in corpus if target in s.labels]
    negatives = [s for s in corpus if target not in s.labels]
    if not positives:
        raise TrainingError(f"no positive sentences for class {target}")
    n_pos, n_neg = target_sizes(len(positives), len(negatives), config)

    if n_pos <= len(positives):
        picked_pos = _stratified(positives, n_pos, rng)
    else:
        picked_pos = _resample(positives, n_pos, rng)
    picked_neg = _stratified(negatives, n_neg, rng)

    out = [(s.text, 1) for s in picked_pos] + [(s.text, -1) for s in picked_neg]
    order = rng.permutation(len(out))
    return [out[i] for i in order]


def _stratified(items: list[LabeledSentence], n: int, rng: np.random.Generator):
    if n >= len(items):
        return list(items)
    strata = defaultdict(list)
    for s in items:
        strata[_stratum(s)].append(s)
    keys = sorted(strata)
    counts = _allocate([len(strata[k]) for k in keys], n)
    out = []
    for key, c in zip(keys, counts):
        group = strata[key]
        chosen = rng.choice(len(group), size=c, replace=False)
        out.extend(group[i] for i in sorted(chosen))
    return out
