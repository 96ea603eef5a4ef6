"""Broken / partial / complete traceability between requested permissions and policy text."""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .corpus import (
    GoldVerdict,
    PERMISSIONS,
    PermissionClass,
    SkillRecord,
    TraceabilityGoldRecord,
)
from .errors import ContractViolation
from .textprep import FilterList, PreprocessedPolicy, preprocess_policy

P = PermissionClass


class SentenceClassifier(Protocol):
    def predict(self, sentence: str) -> frozenset[PermissionClass]: ...


class Coverage(enum.Enum):
    UNCOVERED = 0
    PARTIAL_COVERAGE = 1
    FULL = 2


class Verdict(enum.Enum):
    BROKEN = "broken"
    PARTIAL = "partial"
    COMPLETE = "complete"
    NOT_APPLICABLE = "not_applicable"

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {Verdict.BROKEN: 0, Verdict.PARTIAL: 1, Verdict.COMPLETE: 2, Verdict.NOT_APPLICABLE: -1}

TRIVIAL_REASONS = frozenset({"no_policy", "dead_link", "empty_policy"})


@dataclass(frozen=True)
class DeclaredPractices:
    classes: frozenset[PermissionClass]
    # class -> ((sentence, position in the unfiltered sentence list), ...)
    evidence: dict = field(default_factory=dict, compare=False)
    none_fired: bool = False


@dataclass(frozen=True)
class CoverageRow:
    requested: PermissionClass
    coverage: Coverage
    justification: str
    evidence: tuple[int, ...] = ()


@dataclass(frozen=True)
class TraceabilityVerdict:
    verdict: Verdict
    rows: tuple[CoverageRow, ...]
    reason: str
    declared: DeclaredPractices | None = field(default=None, compare=False)

    def to_json(self, skill_id: str, market: str = "") -> dict:
        return {
            "skill_id": skill_id,
            "market": market,
            "verdict": self.verdict.value,
            "reason": self.reason,
            "rows": [
                {
                    "requested": str(r.requested),
                    "coverage": r.coverage.name.lower(),
                    "rule": r.justification,
                    "evidence": list(r.evidence),
                }
                for r in self.rows
            ],
        }


def extract_declared(policy: PreprocessedPolicy, classifier: SentenceClassifier) -> DeclaredPractices:
    evidence = defaultdict(list)
    none_fired = False
    positions = policy.positions or tuple(range(len(policy.sentences)))
    for sentence, pos in zip(policy.sentences, positions):
        labels = classifier.predict(sentence)
        if P.NONE in labels:
            # A None vote overrides any permission votes for the same sentence.
            none_fired = True
            continue
        for label in labels:
            evidence[label].append((sentence, pos))
    return DeclaredPractices(frozenset(evidence), dict(evidence), none_fired)


def coverage_rule(requested: PermissionClass, declared: frozenset[PermissionClass]) -> tuple[Coverage, str]:
    if requested is P.NONE:
        raise ContractViolation("coverage is undefined for the None class")
    if requested in declared:
        return Coverage.FULL, "R1:declared"
    if requested is P.DEVICE_COUNTRY_POSTAL_CODE and P.DEVICE_ADDRESS in declared:
        return Coverage.FULL, "R2:address-subsumes-postal-code"
    if requested is P.DEVICE_ADDRESS and P.DEVICE_COUNTRY_POSTAL_CODE in declared:
        return Coverage.PARTIAL_COVERAGE, "R3:postal-code-only"
    if requested is P.PERSONAL_INFORMATION and P.PERSONAL_INFORMATION in declared:
        return Coverage.FULL, "R4:personal-information"
    if P.PERSONAL_INFORMATION in declared:
        return Coverage.PARTIAL_COVERAGE, "R5:generic-personal-information"
    return Coverage.UNCOVERED, "R6:undeclared"


def coverage(requested: PermissionClass, declared: frozenset[PermissionClass]) -> Coverage:
    return coverage_rule(requested, declared)[0]


def _supporting_class(rule: str, requested: PermissionClass):
    return {
        "R1:declared": requested,
        "R2:address-subsumes-postal-code": P.DEVICE_ADDRESS,
        "R3:postal-code-only": P.DEVICE_COUNTRY_POSTAL_CODE,
        "R4:personal-information": P.PERSONAL_INFORMATION,
        "R5:generic-personal-information": P.PERSONAL_INFORMATION,
    }.get(rule)


def verdict_from_rows(rows: Iterable[CoverageRow]) -> Verdict:
    rows = list(rows)
    if not rows:
        return Verdict.NOT_APPLICABLE
    if all(r.coverage is Coverage.FULL for r in rows):
        return Verdict.COMPLETE
    if all(r.coverage is Coverage.UNCOVERED for r in rows):
        return Verdict.BROKEN
    return Verdict.PARTIAL


def vet_declared(requested: Iterable[PermissionClass], declared: DeclaredPractices) -> TraceabilityVerdict:
    rows = []
    for r in sorted(set(requested), key=PERMISSIONS.index):
        cov, rule = coverage_rule(r, declared.classes)
        support = _supporting_class(rule, r)
        positions = tuple(pos for _, pos in declared.evidence.get(support, ())) if support else ()
        rows.append(CoverageRow(r, cov, rule, positions))
    verdict = verdict_from_rows(rows)
    reason = "coverage" if rows else "no_permissions"
    return TraceabilityVerdict(verdict, tuple(rows), reason, declared)


def _broken(requested, reason: str) -> TraceabilityVerdict:
    rows = tuple(CoverageRow(r, Coverage.UNCOVERED, reason)
                 for r in sorted(requested, key=PERMISSIONS.index))
    return TraceabilityVerdict(Verdict.BROKEN, rows, reason)


def vet_skill(record: SkillRecord, classifier: SentenceClassifier,
              filters: FilterList | None = None) -> TraceabilityVerdict:
    requested = record.requested
    if not requested:
        return TraceabilityVerdict(Verdict.NOT_APPLICABLE, (), "no_permissions")
    if record.policy_text is None:
        # A URL without fetched text means the link was recorded as dead.
        return _broken(requested, "dead_link" if record.policy_url else "no_policy")
    policy = preprocess_policy(record.skill_id, record.policy_text, filters)
    if policy.is_empty:
        return _broken(requested, "empty_policy")
    return vet_declared(requested, extract_declared(policy, classifier))


@dataclass
class GoldEvaluation:
    # (predicted Verdict, gold GoldVerdict) -> count
    matrix: dict
    total: int
    correct: int
    excluded: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def count(self, predicted: Verdict, gold: GoldVerdict) -> int:
        return self.matrix.get((predicted, gold), 0)

    def recall(self, gold: GoldVerdict) -> float:
        col = sum(self.count(p, gold) for p in Verdict)
        return self.count(Verdict(gold.value), gold) / col if col else 0.0

    def row_total(self, predicted: Verdict) -> int:
        return sum(self.count(predicted, g) for g in GoldVerdict)

    def column_total(self, gold: GoldVerdict) -> int:
        return sum(self.count(p, gold) for p in Verdict)


def evaluate_against_gold(gold: list[TraceabilityGoldRecord], classifier: SentenceClassifier,
                          filters: FilterList | None = None, include_trivial: bool = True,
                          verdicts_out: list | None = None) -> GoldEvaluation:
    """Confusion matrix of predicted (rows) against gold (columns) verdicts.

    NotApplicable predictions always count as errors. With ``include_trivial`` off,
    records with no policy, a dead link or an empty policy are left out.
    """
    matrix = defaultdict(int)
    total = correct = excluded = 0
    for rec in gold:
        result = vet_skill(rec.as_skill(), classifier, filters)
        if not include_trivial and result.reason in TRIVIAL_REASONS:
            excluded += 1
            continue
        if verdicts_out is not None:
            verdicts_out.append((rec, result))
        matrix[(result.verdict, rec.gold_verdict)] += 1
        total += 1
        if result.verdict.value == rec.gold_verdict.value:
            correct += 1
    return GoldEvaluation(dict(matrix), total, correct, excluded)


@dataclass(frozen=True)
class ReuseGroup:
    policy_url: str
    skill_ids: tuple[str, ...]
    developers: tuple[str, ...]
    permission_sets: tuple[tuple[str, ...], ...]
    markets: tuple[str, ...]

    @property
    def cross_developer(self) -> bool:
        return len(self.developers) > 1

    @property
    def mixed_permissions(self) -> bool:
        return len(self.permission_sets) > 1


def detect_reused_policies(records: Iterable[SkillRecord]) -> list[ReuseGroup]:
    groups = defaultdict(list)
    for rec in records:
        url = (rec.policy_url or "").strip()
        if url:
            groups[url].append(rec)
    out = []
    for url in sorted(groups):
        members = groups[url]
        if len({m.skill_id for m in members}) < 2:
            continue
        out.append(ReuseGroup(
            policy_url=url,
            skill_ids=tuple(sorted({m.skill_id for m in members})),
            developers=tuple(sorted({m.developer for m in members})),
            permission_sets=tuple(sorted({tuple(sorted(m.permissions)) for m in members})),
            markets=tuple(sorted({m.market for m in members})),
        ))
    return out
