"""Skill data model and loaders for marketplace snapshots, PBSD and TBPD files.

All three file kinds are newline-delimited JSON, one object per line, UTF-8.
"""
from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptyCorpusError, ParseError

log = logging.getLogger(__name__)

# Cross-market tie-break order for deduplication.
MARKETS = ("US", "UK", "IN", "CA", "AU", "DE", "ES", "IT", "JP", "FR", "MX")
MARKET_RANK = {m: i for i, m in enumerate(MARKETS)}
ENGLISH_MARKETS = ("US", "UK", "IN", "CA", "AU")


class PermissionClass(enum.Enum):
    AMAZON_PAY = "AmazonPay"
    DEVICE_ADDRESS = "DeviceAddress"
    DEVICE_COUNTRY_POSTAL_CODE = "DeviceCountryPostalCode"
    EMAIL_ADDRESS = "EmailAddress"
    LOCATION_SERVICES = "LocationServices"
    MOBILE_NUMBER = "MobileNumber"
    NAME = "Name"
    PERSONAL_INFORMATION = "PersonalInformation"
    NONE = "None"

    def __str__(self):
        return self.value

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, label: str) -> "PermissionClass":
        """Accept "AmazonPay", "Amazon Pay", "amazon_pay" and similar spellings."""
        key = _label_key(label)
        try:
            return _LABEL_LOOKUP[key]
        except KeyError:
            raise ValueError(f"unknown permission label {label!r}") from None


_DISPLAY = {
    PermissionClass.AMAZON_PAY: "Amazon Pay",
    PermissionClass.DEVICE_ADDRESS: "Device Address",
    PermissionClass.DEVICE_COUNTRY_POSTAL_CODE: "Device Country and Postal Code",
    PermissionClass.EMAIL_ADDRESS: "Email Address",
    PermissionClass.LOCATION_SERVICES: "Location Services",
    PermissionClass.MOBILE_NUMBER: "Mobile Number",
    PermissionClass.NAME: "Name",
    PermissionClass.PERSONAL_INFORMATION: "Personal Information",
    PermissionClass.NONE: "None",
}

# The 8 analyzed permissions, in a stable order used by reports and model files.
PERMISSIONS = tuple(p for p in PermissionClass if p is not PermissionClass.NONE)
ALL_CLASSES = tuple(PermissionClass)


def _label_key(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text.lower().replace("&", "and"))


_LABEL_LOOKUP = {}
for _p in PermissionClass:
    _LABEL_LOOKUP[_label_key(_p.value)] = _p
    _LABEL_LOOKUP[_label_key(_DISPLAY[_p])] = _p


class Excluded(enum.Enum):
    """Marketplace permissions dropped from traceability analysis."""

    EXCLUDED = "Excluded"

    def __repr__(self):
        return "EXCLUDED"


EXCLUDED = Excluded.EXCLUDED

_RAW_PERMISSIONS = {
    "amazon pay": PermissionClass.AMAZON_PAY,
    "device address": PermissionClass.DEVICE_ADDRESS,
    "device country and postal code": PermissionClass.DEVICE_COUNTRY_POSTAL_CODE,
    "email address": PermissionClass.EMAIL_ADDRESS,
    "location services": PermissionClass.LOCATION_SERVICES,
    "mobile number": PermissionClass.MOBILE_NUMBER,
    "name": PermissionClass.NAME,
    "customer name": PermissionClass.NAME,
    "full name": PermissionClass.NAME,
    "first name": PermissionClass.NAME,
    "given name": PermissionClass.NAME,
    "list read access": PermissionClass.PERSONAL_INFORMATION,
    "list write access": PermissionClass.PERSONAL_INFORMATION,
    "list read write access": PermissionClass.PERSONAL_INFORMATION,
    "personal information": PermissionClass.PERSONAL_INFORMATION,
    "reminder": EXCLUDED,
    "notification": EXCLUDED,
    "timer": EXCLUDED,
    "skill personalization": EXCLUDED,
}


def _raw_key(raw: str) -> str:
    words = re.sub(r"[^a-z0-9]+", " ", raw.lower().replace("&", " and ")).split()
    # "Lists Read Access", "Reminders", "Notifications" and so on.
    singular = {"lists": "list", "reminders": "reminder", "notifications": "notification",
                "timers": "timer", "services": "services"}
    return " ".join(singular.get(w, w) for w in words)


def normalize_permission(raw: str) -> PermissionClass | Excluded:
    key = _raw_key(raw)
    result = _RAW_PERMISSIONS.get(key)
    if result is None:
        log.warning("unknown marketplace permission %r excluded from analysis", raw)
        return EXCLUDED
    return result


def normalize_permissions(raw: Iterable[str]) -> frozenset[PermissionClass]:
    out = set()
    for r in raw:
        p = normalize_permission(r)
        if p is not EXCLUDED:
            out.add(p)
    return frozenset(out)


@dataclass(frozen=True)
class SkillRecord:
    skill_id: str
    market: str
    name: str
    developer: str
    category: str
    permissions: tuple[str, ...] = ()
    invocation_name: str | None = None
    subcategory: str | None = None
    policy_url: str | None = None
    policy_text: str | None = None
    account_linking_url: str | None = None
    description: str | None = None

    def __post_init__(self):
        if not self.skill_id:
            raise ValueError("skill_id must be non-empty")
        if self.market not in MARKET_RANK:
            raise ValueError(f"unknown market code {self.market!r}")
        perms = tuple(dict.fromkeys(self.permissions))
        object.__setattr__(self, "permissions", perms)

    @property
    def requested(self) -> frozenset[PermissionClass]:
        return normalize_permissions(self.permissions)

    def to_json(self) -> dict:
        out = {
            "skill_id": self.skill_id,
            "market": self.market,
            "name": self.name,
            "invocation_name": self.invocation_name,
            "developer": self.developer,
            "category": self.category,
            "subcategory": self.subcategory,
            "permissions": list(self.permissions),
            "policy_url": self.policy_url,
            "policy_text": self.policy_text,
            "account_linking_url": self.account_linking_url,
            "description": self.description,
        }
        return {k: v for k, v in out.items() if v is not None}


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    labels: frozenset[PermissionClass]
    source_policy: str = ""

    def __post_init__(self):
        # Sentences are stored lowercase, ASCII-only and single-spaced.
        text = " ".join(self.text.lower().encode("ascii", "ignore").decode("ascii").split())
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "labels", frozenset(self.labels))
        if PermissionClass.NONE in self.labels and len(self.labels) > 1:
            raise ValueError("None label must appear alone")
        if not self.labels:
            raise ValueError("a labeled sentence needs at least one label")


class GoldVerdict(enum.Enum):
    BROKEN = "broken"
    PARTIAL = "partial"
    COMPLETE = "complete"


@dataclass(frozen=True)
class TraceabilityGoldRecord:
    skill_id: str
    market: str
    requested: tuple[str, ...]
    policy_text: str
    gold_verdict: GoldVerdict
    developer: str = ""
    policy_url: str | None = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def as_skill(self) -> SkillRecord:
        return SkillRecord(
            skill_id=self.skill_id,
            market=self.market,
            name=self.extra.get("name", self.skill_id),
            developer=self.developer,
            category=self.extra.get("category", ""),
            permissions=self.requested,
            policy_url=self.policy_url,
            policy_text=self.policy_text,
        )


def _iter_json_lines(path) -> Iterator[tuple[int, object | Exception]]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, exc


def _opt_str(obj: dict, key: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string")
    return value


def skill_from_json(obj: dict) -> SkillRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    for key in ("skill_id", "market"):
        if not obj.get(key):
            raise ValueError(f"missing required field {key!r}")
    perms = obj.get("permissions", [])
    if not isinstance(perms, list) or not all(isinstance(p, str) for p in perms):
        raise ValueError("permissions must be a list of strings")
    return SkillRecord(
        skill_id=str(obj["skill_id"]),
        market=str(obj["market"]).upper(),
        name=_opt_str(obj, "name") or "",
        invocation_name=_opt_str(obj, "invocation_name"),
        developer=_opt_str(obj, "developer") or "",
        category=_opt_str(obj, "category") or "",
        subcategory=_opt_str(obj, "subcategory"),
        permissions=tuple(perms),
        policy_url=_opt_str(obj, "policy_url"),
        policy_text=_opt_str(obj, "policy_text"),
        account_linking_url=_opt_str(obj, "account_linking_url"),
        description=_opt_str(obj, "description"),
    )


def load_snapshot(path, issues: list | None = None) -> list[SkillRecord]:
    """Read a snapshot file; malformed lines are logged and skipped.

    When ``issues`` is given, ``(line_number, message)`` pairs are appended to it.
    """
    records = []
    for lineno, obj in _iter_json_lines(path):
        try:
            if isinstance(obj, Exception):
                raise ValueError(f"invalid JSON ({obj.msg})")
            records.append(skill_from_json(obj))
        except ValueError as exc:
            log.warning("%s:%d: skipped malformed record: %s", path, lineno, exc)
            if issues is not None:
                issues.append((lineno, str(exc)))
    if not records:
        raise EmptyCorpusError(f"{path}: no well-formed skill records")
    return records


def deduplicate(records: Iterable[SkillRecord]) -> list[SkillRecord]:
    best: dict[str, SkillRecord] = {}
    for rec in records:
        kept = best.get(rec.skill_id)
        if kept is None or MARKET_RANK[rec.market] < MARKET_RANK[kept.market]:
            best[rec.skill_id] = rec
    return [best[k] for k in sorted(best)]


def write_snapshot(records: Iterable[SkillRecord], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_pbsd(*paths) -> list[LabeledSentence]:
    """Load one or more PBSD files; extra files (e.g. APP-350 rows) are appended."""
    out = []
    for path in paths:
        for lineno, obj in _iter_json_lines(path):
            if isinstance(obj, Exception):
                raise ParseError(f"invalid JSON ({obj.msg})", path, lineno)
            try:
                text = obj["text"]
                raw_labels = obj["labels"]
                if isinstance(raw_labels, str):
                    raw_labels = [raw_labels]
                labels = frozenset(PermissionClass.parse(x) for x in raw_labels)
                out.append(LabeledSentence(text, labels, str(obj.get("source_policy", ""))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad PBSD row: {exc}", path, lineno) from None
    if not out:
        raise EmptyCorpusError(f"{', '.join(map(str, paths))}: no labeled sentences")
    return out


def write_pbsd(sentences: Iterable[LabeledSentence], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            row = {
                "text": s.text,
                "labels": sorted(str(x) for x in s.labels),
                "source_policy": s.source_policy,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def class_counts(sentences: Iterable[LabeledSentence]) -> dict[PermissionClass, int]:
    counts = {c: 0 for c in ALL_CLASSES}
    for s in sentences:
        for label in s.labels:
            counts[label] += 1
    return counts


def load_tbpd(path) -> list[TraceabilityGoldRecord]:
    out = []
    for lineno, obj in _iter_json_lines(path):
        if isinstance(obj, Exception):
            raise ParseError(f"invalid JSON ({obj.msg})", path, lineno)
        try:
            verdict_raw = str(obj["gold_verdict"]).strip().lower()
            try:
                verdict = GoldVerdict(verdict_raw)
            except ValueError:
                raise ValueError(f"unknown verdict {obj['gold_verdict']!r}") from None
            perms = obj.get("permissions", [])
            if not isinstance(perms, list):
                raise ValueError("permissions must be a list")
            known = {"skill_id", "market", "permissions", "policy_text", "gold_verdict",
                     "developer", "policy_url"}
            out.append(TraceabilityGoldRecord(
                skill_id=str(obj["skill_id"]),
                market=str(obj.get("market", "US")).upper(),
                requested=tuple(perms),
                policy_text=obj.get("policy_text") or "",
                gold_verdict=verdict,
                developer=obj.get("developer") or "",
                policy_url=obj.get("policy_url"),
                extra={k: v for k, v in obj.items() if k not in known},
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad TBPD row: {exc}", path, lineno) from None
    if not out:
        raise EmptyCorpusError(f"{path}: no gold records")
    return out
