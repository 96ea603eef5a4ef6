"""Invocation-name reuse and phonetic similarity (skill squatting risk).

Names are transcribed with the CMU Pronouncing Dictionary and compared with a
Levenshtein distance over phoneme symbols, normalized by the longer sequence.
"""
from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import SkillRecord
from .errors import ContractViolation, EmptyCorpusError

DIGIT_WORDS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine")
DEFAULT_THRESHOLDS = (0.1, 0.2)

_VARIANT = re.compile(r"^(.+)\((\d+)\)$")
_STRESS = re.compile(r"\d+$")


@dataclass(frozen=True)
class PhoneticDictionary:
    entries: dict[str, tuple[str, ...]]
    variants: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word in self.entries

    def pronunciations(self, word: str) -> tuple[tuple[str, ...], ...]:
        if word not in self.entries:
            return ()
        return (self.entries[word],) + self.variants.get(word, ())


def load_cmudict(path) -> PhoneticDictionary:
    """Parse CMUdict plain text.

    Handles the 0.7b layout (``WORD  PH1 PH2``, ``;;;`` comments) as well as the
    later lowercase layout with ``#`` trailing comments.
    """
    entries: dict[str, tuple[str, ...]] = {}
    variants: dict[str, list[tuple[str, ...]]] = defaultdict(list)
    with Path(path).open("r", encoding="latin-1") as fh:
        for line in fh:
            if line.startswith(";;;"):
                continue
            line = line.split(" #", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                continue
            word = parts[0].lower()
            phones = tuple(_STRESS.sub("", p.upper()) for p in parts[1:])
            m = _VARIANT.match(word)
            if m:
                variants[m.group(1)].append(phones)
            elif word not in entries:
                entries[word] = phones
    if not entries:
        raise EmptyCorpusError(f"{path}: no dictionary entries")
    return PhoneticDictionary(entries, {w: tuple(v) for w, v in variants.items()})


def normalize_name(raw: str | None) -> str:
    if not raw:
        return ""
    text = raw.lower().encode("ascii", "ignore").decode("ascii")
    text = re.sub(r"\d", lambda m: f" {DIGIT_WORDS[int(m.group())]} ", text)
    text = re.sub(r"[^a-z0-9\s]", "", text)
    return " ".join(text.split())


def transcribe(name: str, dictionary: PhoneticDictionary) -> tuple[str, ...] | None:
    """Concatenated primary pronunciations, or None when any word is missing."""
    words = name.split()
    if not words:
        return None
    phones: list[str] = []
    for w in words:
        entry = dictionary.entries.get(w)
        if entry is None:
            return None
        phones.extend(entry)
    return tuple(phones)


def levenshtein(p: Sequence, q: Sequence) -> int:
    if len(p) < len(q):
        p, q = q, p
    previous = list(range(len(q) + 1))
    for i, a in enumerate(p, start=1):
        current = [i]
        for j, b in enumerate(q, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (a != b)))
        previous = current
    return previous[-1]


def phonetic_distance(p: Sequence[str], q: Sequence[str]) -> float:
    if not p or not q:
        raise ContractViolation("phonetic distance needs two non-empty sequences")
    return levenshtein(p, q) / max(len(p), len(q))


@dataclass(frozen=True)
class PhoneticName:
    skill_id: str
    market: str
    raw: str
    normalized: str
    phonemes: tuple[str, ...]

    @property
    def transcribable(self) -> bool:
        return bool(self.phonemes)


def phonetic_names(records: Iterable[SkillRecord], dictionary: PhoneticDictionary) -> list[PhoneticName]:
    out = []
    for rec in records:
        raw = rec.invocation_name or ""
        norm = normalize_name(raw)
        phones = transcribe(norm, dictionary) or ()
        out.append(PhoneticName(rec.skill_id, rec.market, raw, norm, phones))
    return out


@dataclass(frozen=True)
class SimilarityHit:
    a: str
    b: str
    distance: float


def nearest_neighbors(names: Sequence[PhoneticName], market: str) -> list[SimilarityHit]:
    """Closest other transcribable name in ``market`` for each transcribable name.

    Candidates are visited in order of growing length difference; the visit stops
    once the length gap alone guarantees a distance above the best found so far.
    Ties go to the smaller skill id.
    """
    pool = [n for n in names if n.market == market and n.transcribable]
    if len(pool) < 2:
        raise EmptyCorpusError(f"market {market}: need at least 2 transcribable names")
    by_len = defaultdict(list)
    for n in pool:
        by_len[len(n.phonemes)].append(n)
    lengths = sorted(by_len)
    cache: dict[tuple, float] = {}

    out = []
    for query in sorted(pool, key=lambda n: n.skill_id):
        qlen = len(query.phonemes)
        best_d, best_id = float("inf"), None
        for gap in range(0, lengths[-1] + 1):
            bound_lens = [L for L in (qlen - gap, qlen + gap) if L in by_len]
            if gap == 0:
                bound_lens = bound_lens[:1]
            if best_id is not None:
                # Levenshtein >= length difference, so every remaining candidate
                # is at least gap / (qlen + gap) away.
                if gap / (qlen + gap) > best_d:
                    break
            for L in bound_lens:
                if best_id is not None and gap / max(L, qlen) > best_d:
                    continue
                for cand in by_len[L]:
                    if cand.skill_id == query.skill_id:
                        continue
                    key = (query.phonemes, cand.phonemes) if query.phonemes <= cand.phonemes \
                        else (cand.phonemes, query.phonemes)
                    d = cache.get(key)
                    if d is None:
                        d = cache[key] = phonetic_distance(query.phonemes, cand.phonemes)
                    if d < best_d or (d == best_d and cand.skill_id < best_id):
                        best_d, best_id = d, cand.skill_id
        out.append(SimilarityHit(query.skill_id, best_id, best_d))
    return out


def nearest_neighbors_bruteforce(names: Sequence[PhoneticName], market: str) -> list[SimilarityHit]:
    pool = [n for n in names if n.market == market and n.transcribable]
    if len(pool) < 2:
        raise EmptyCorpusError(f"market {market}: need at least 2 transcribable names")
    out = []
    for q in sorted(pool, key=lambda n: n.skill_id):
        scored = [(phonetic_distance(q.phonemes, c.phonemes), c.skill_id)
                  for c in pool if c.skill_id != q.skill_id]
        d, cid = min(scored)
        out.append(SimilarityHit(q.skill_id, cid, d))
    return out


@dataclass(frozen=True)
class BucketRow:
    market: str
    total: int
    within: dict  # threshold -> count with min distance <= threshold
    within_nonzero: dict  # same, excluding exact duplicates (distance 0)

    def share(self, threshold: float) -> float:
        return self.within[threshold] / self.total if self.total else 0.0


def threshold_buckets(hits: Sequence[SimilarityHit], market: str,
                      thresholds=DEFAULT_THRESHOLDS) -> BucketRow:
    eps = 1e-12
    within = {t: sum(1 for h in hits if h.distance <= t + eps) for t in thresholds}
    nonzero = {t: sum(1 for h in hits if 0 < h.distance <= t + eps) for t in thresholds}
    return BucketRow(market, len(hits), within, nonzero)


@dataclass(frozen=True)
class NameReuseReport:
    # market -> {normalized name: number of distinct skills}
    per_market: dict
    # normalized name -> number of distinct skills over all given records
    cross_market: dict
    # (market, normalized name, developer) -> skill ids, for groups of size >= 2
    same_developer: dict

    @property
    def skills_sharing_name(self) -> int:
        return sum(c for c in self.cross_market.values())

    def histogram(self, market: str | None = None) -> Counter:
        """Number of names by how many *other* skills share them."""
        counts = self.cross_market if market is None else self.per_market.get(market, {})
        return Counter(c - 1 for c in counts.values())


def name_reuse_report(records: Iterable[SkillRecord]) -> NameReuseReport:
    """Group skills by normalized invocation name; only shared names are kept."""
    per_market_ids = defaultdict(lambda: defaultdict(set))
    cross_ids = defaultdict(set)
    dev_ids = defaultdict(set)
    for rec in records:
        name = normalize_name(rec.invocation_name)
        if not name:
            continue
        per_market_ids[rec.market][name].add(rec.skill_id)
        cross_ids[name].add(rec.skill_id)
        dev_ids[(rec.market, name, rec.developer)].add(rec.skill_id)
    per_market = {
        m: {n: len(ids) for n, ids in sorted(names.items()) if len(ids) > 1}
        for m, names in sorted(per_market_ids.items())
    }
    per_market = {m: v for m, v in per_market.items() if v}
    cross = {n: len(ids) for n, ids in sorted(cross_ids.items()) if len(ids) > 1}
    same_dev = {k: tuple(sorted(ids)) for k, ids in sorted(dev_ids.items()) if len(ids) > 1}
    return NameReuseReport(per_market, cross, same_dev)
