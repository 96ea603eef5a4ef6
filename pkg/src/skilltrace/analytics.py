"""Market statistics, account-linking classification and table-style reports."""
from __future__ import annotations

import csv
import enum
import io
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlsplit

import tldextract

from .corpus import GoldVerdict, MARKETS, SkillRecord, deduplicate
from .errors import ContractViolation
from .phonetics import BucketRow
from .traceability import GoldEvaluation, Verdict

log = logging.getLogger(__name__)

DEFAULT_STOP_WORDS = frozenset({
    "the", "app", "inc", "ltd", "llc", "alexa", "skill", "skills", "limited", "corp",
    "company", "group", "official", "games", "game", "facts", "fact", "with", "your",
})
MIN_TOKEN_LENGTH = 4

_extract = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)


@dataclass(frozen=True)
class OAuthProviderList:
    providers: tuple[str, ...]

    def __post_init__(self):
        cleaned = tuple(dict.fromkeys(p.strip().lower() for p in self.providers if p.strip()))
        if not cleaned:
            raise ValueError("provider list must not be empty")
        if any(re.search(r"\s", p) for p in cleaned):
            raise ValueError("provider tokens must not contain whitespace")
        object.__setattr__(self, "providers", cleaned)

    @classmethod
    def load(cls, path) -> "OAuthProviderList":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(l for l in (x.strip() for x in lines) if l and not l.startswith("#")))

    @classmethod
    def default(cls) -> "OAuthProviderList":
        ref = resources.files("skilltrace") / "data" / "oauth_providers.txt"
        with resources.as_file(ref) as p:
            return cls.load(p)


class AccountLinkClass(enum.Enum):
    DEVELOPER = "Developer"
    THIRD_PARTY = "Third-Party"
    THIRD_PARTY_OR_DEVELOPER = "Third-Party or Developer"
    UNRESOLVED = "Unresolved"


def registrable_label(url: str) -> str | None:
    """Registrable domain without its public suffix, e.g. ``google`` for accounts.google.co.uk."""
    parts = urlsplit(url.strip() if "://" in url else "https://" + url.strip())
    host = parts.hostname
    if not host or "." not in host:
        return None
    ext = _extract(host)
    if not ext.domain or not ext.suffix:
        return None
    return ext.domain.lower()


def _name_tokens(text: str, stop_words) -> set[str]:
    words = [w for w in re.findall(r"[a-z0-9]+", (text or "").lower()) if w not in stop_words]
    out = {w for w in words if len(w) >= MIN_TOKEN_LENGTH}
    if len(words) > 1:
        # "News Desk" should match newsdesk.com.
        out.add("".join(words))
    return out


def _in_label(token: str, label: str) -> bool:
    # Short tokens only count as whole hyphen-separated parts of the label.
    if len(token) <= 4:
        return token in label.split("-")
    return token in label.replace("-", "")


def classify_account_link(record: SkillRecord, providers: OAuthProviderList,
                          stop_words=DEFAULT_STOP_WORDS) -> AccountLinkClass:
    if not record.account_linking_url:
        raise ContractViolation(f"{record.skill_id}: no account linking URL")
    label = registrable_label(record.account_linking_url)
    if label is None:
        log.warning("%s: unparseable account linking URL %r", record.skill_id,
                    record.account_linking_url)
        return AccountLinkClass.UNRESOLVED
    dev_tokens = _name_tokens(record.name, stop_words) | _name_tokens(record.developer, stop_words)
    dev_hits = {t for t in dev_tokens if _in_label(t, label)}
    # A provider's own skill linking to its own domain is first-party.
    oauth_match = any(_in_label(p, label) and not (p in dev_hits and label == p)
                      for p in providers.providers)
    if dev_hits and oauth_match:
        return AccountLinkClass.THIRD_PARTY_OR_DEVELOPER
    if dev_hits:
        return AccountLinkClass.DEVELOPER
    if oauth_match:
        return AccountLinkClass.THIRD_PARTY
    return AccountLinkClass.UNRESOLVED


def account_link_distribution(records: Iterable[SkillRecord], providers: OAuthProviderList) -> Counter:
    out = Counter({c: 0 for c in AccountLinkClass})
    for rec in records:
        if rec.account_linking_url:
            out[classify_account_link(rec, providers)] += 1
    return out


HISTOGRAM_BUCKETS = ("1", "2", "3", "4", "5+")


def _bucket(n: int) -> str:
    return str(n) if n < 5 else "5+"


@dataclass
class MarketStats:
    skills: int = 0
    developers: int = 0
    permission_frequency: Counter = field(default_factory=Counter)
    histogram: dict = field(default_factory=lambda: {b: 0 for b in HISTOGRAM_BUCKETS})

    @property
    def skills_with_permissions(self) -> int:
        return sum(self.histogram.values())


@dataclass
class MarketSummary:
    per_market: dict  # market -> MarketStats
    total: MarketStats
    unique: MarketStats


def _stats(records: Sequence[SkillRecord]) -> MarketStats:
    st = MarketStats()
    st.skills = len(records)
    st.developers = len({r.developer for r in records})
    for r in records:
        st.permission_frequency.update(r.permissions)
        if r.permissions:
            st.histogram[_bucket(len(r.permissions))] += 1
    return st


def market_summary(records: Iterable[SkillRecord]) -> MarketSummary:
    records = list(records)
    by_market = defaultdict(list)
    for r in records:
        by_market[r.market].append(r)
    per_market = {m: _stats(by_market[m]) for m in MARKETS if m in by_market}
    total = MarketStats()
    for st in per_market.values():
        total.skills += st.skills
        total.developers += st.developers
        total.permission_frequency.update(st.permission_frequency)
        for b in HISTOGRAM_BUCKETS:
            total.histogram[b] += st.histogram[b]
    unique = _stats(deduplicate(records))
    return MarketSummary(per_market, total, unique)


class DeveloperClass(enum.Enum):
    GOOD = "Good"
    BAD = "Bad"
    UGLY = "Ugly"
    MIXED = "Mixed"


def developer_profile(verdicts: Iterable[tuple[str, str, object]]) -> dict[str, DeveloperClass]:
    """Classify developers from ``(skill_id, developer, verdict)`` triples.

    ``verdict`` may be a ``Verdict``, a ``TraceabilityVerdict`` or a ``GoldVerdict``.
    """
    seen = defaultdict(set)
    for skill_id, developer, v in verdicts:
        v = getattr(v, "verdict", v)
        if isinstance(v, GoldVerdict):
            v = Verdict(v.value)
        if v is Verdict.NOT_APPLICABLE:
            raise ContractViolation(f"{skill_id}: NotApplicable verdicts cannot be profiled")
        seen[developer].add(v)
    out = {}
    for dev in sorted(seen):
        kinds = seen[dev]
        if kinds == {Verdict.COMPLETE}:
            out[dev] = DeveloperClass.GOOD
        elif kinds == {Verdict.BROKEN}:
            out[dev] = DeveloperClass.BAD
        elif kinds == {Verdict.PARTIAL}:
            out[dev] = DeveloperClass.UGLY
        else:
            out[dev] = DeveloperClass.MIXED
    return out


@dataclass(frozen=True)
class VerdictRow:
    """One line of a verdict report, as needed by the aggregate tables."""
    skill_id: str
    market: str
    developer: str
    subcategory: str
    verdict: Verdict


@dataclass
class ReportInputs:
    records: list | None = None            # raw (not deduplicated) SkillRecords
    verdicts: list | None = None           # VerdictRow
    gold: GoldEvaluation | None = None
    phonetic_buckets: list | None = None   # BucketRow
    providers: OAuthProviderList | None = None
    thresholds: tuple = (0.1, 0.2)


def _pct(n: int, d: int) -> str:
    return f"{100.0 * n / d:.2f}" if d else "0.00"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _table1(records):
    header = ["market", "skills", "skills_pct", "developers", "developers_pct"]
    if not records:
        return header, []
    s = market_summary(records)
    rows = []
    for m, st in s.per_market.items():
        rows.append([m, st.skills, _pct(st.skills, s.total.skills),
                     st.developers, _pct(st.developers, s.total.developers)])
    rows.append(["Total", s.total.skills, "100.00", s.total.developers, "100.00"])
    rows.append(["Unique", s.unique.skills, _pct(s.unique.skills, s.total.skills),
                 s.unique.developers, _pct(s.unique.developers, s.total.developers)])
    return header, rows


def _table3(records):
    header = ["market", "skills_with_permissions"]
    for b in HISTOGRAM_BUCKETS:
        header += [f"n_{b}", f"pct_{b}"]
    if not records:
        return header, []
    s = market_summary(records)

    def row(label, st):
        n = st.skills_with_permissions
        out = [label, n]
        for b in HISTOGRAM_BUCKETS:
            out += [st.histogram[b], _pct(st.histogram[b], n)]
        return out

    rows = [row(m, st) for m, st in s.per_market.items()]
    rows.append(row("Total", s.total))
    rows.append(row("Unique", s.unique))
    return header, rows


def _table4(verdicts):
    header = ["subcategory", "rank", "broken", "broken_pct", "partial", "partial_pct",
              "complete", "complete_pct"]
    counts = defaultdict(Counter)
    for v in verdicts:
        if v.verdict is Verdict.NOT_APPLICABLE:
            continue
        counts[v.subcategory or "(Uncategorised)"][v.verdict] += 1
    scored = []
    for sub, c in counts.items():
        b, p, k = c[Verdict.BROKEN], c[Verdict.PARTIAL], c[Verdict.COMPLETE]
        scored.append(((b + p) / (k + 1), sub, b, p, k))
    scored.sort(key=lambda x: (-x[0], x[1]))
    rows = []
    for rank, (_, sub, b, p, k) in enumerate(scored, start=1):
        n = b + p + k
        rows.append([sub, rank, b, _pct(b, n), p, _pct(p, n), k, _pct(k, n)])
    return header, rows


def _table7(gold: GoldEvaluation):
    header = ["predicted", "broken", "partial", "complete", "total"]
    rows = []
    predicted = [Verdict.BROKEN, Verdict.PARTIAL, Verdict.COMPLETE]
    if gold.row_total(Verdict.NOT_APPLICABLE):
        predicted.append(Verdict.NOT_APPLICABLE)
    for p in predicted:
        rows.append([p.value] + [gold.count(p, g) for g in GoldVerdict] + [gold.row_total(p)])
    rows.append(["total"] + [gold.column_total(g) for g in GoldVerdict] + [gold.total])
    return header, rows


def _table8(records, providers):
    header = ["account_type", "skills", "pct"]
    linked = [r for r in deduplicate(records) if r.account_linking_url] if records else []
    if not linked:
        return header, []
    dist = account_link_distribution(linked, providers)
    total = sum(dist.values())
    rows = [[c.value, dist[c], _pct(dist[c], total)] for c in AccountLinkClass]
    rows.append(["Total", total, "100.00"])
    return header, rows


def phonetic_threshold_table(buckets: Sequence[BucketRow], thresholds):
    header = ["market"]
    for t in thresholds:
        header += [f"lev_le_{t}", f"pct_le_{t}", f"lev_le_{t}_nonzero"]
    header.append("total")
    rows = []
    for b in buckets:
        row = [b.market]
        for t in thresholds:
            row += [b.within[t], _pct(b.within[t], b.total), b.within_nonzero[t]]
        row.append(b.total)
        rows.append(row)
    return header, rows


def _developer_table(verdicts):
    header = ["class", "developers"]
    usable = [(v.skill_id, v.developer, v.verdict) for v in verdicts
              if v.verdict is not Verdict.NOT_APPLICABLE]
    prof = Counter(developer_profile(usable).values()) if usable else Counter()
    return header, [[c.value, prof[c]] for c in DeveloperClass] if usable else []


def render_reports(inputs: ReportInputs, out_dir) -> tuple[list[Path], list[str]]:
    """Write every table the inputs support; returns (written paths, skipped notices)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []
    summary = []

    def emit(name, table):
        header, rows = table
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)
        return rows

    if inputs.records is not None:
        rows = emit("table1_skills_developers.csv", _table1(inputs.records))
        emit("table3_permission_counts.csv", _table3(inputs.records))
        providers = inputs.providers or OAuthProviderList.default()
        emit("table8_account_linking.csv", _table8(inputs.records, providers))
        if rows:
            summary.append(f"skills: {rows[-2][1]} total, {rows[-1][1]} unique")
    else:
        skipped.append("tables 1, 3, 8: no snapshot records given")

    if inputs.verdicts is not None:
        emit("table4_traceability_by_subcategory.csv", _table4(inputs.verdicts))
        emit("developer_profiles.csv", _developer_table(inputs.verdicts))
        tally = Counter(v.verdict for v in inputs.verdicts)
        summary.append("verdicts: " + ", ".join(f"{v.value}={tally[v]}" for v in Verdict))
    else:
        skipped.append("table 4 and developer profiles: no verdicts given")

    if inputs.gold is not None:
        emit("table7_confusion.csv", _table7(inputs.gold))
        summary.append(f"gold accuracy: {inputs.gold.correct}/{inputs.gold.total}"
                       f" = {inputs.gold.accuracy:.4f}")
    else:
        skipped.append("table 7: no gold evaluation given")

    if inputs.phonetic_buckets is not None:
        emit("phonetic_thresholds.csv", phonetic_threshold_table(inputs.phonetic_buckets, inputs.thresholds))
        for b in inputs.phonetic_buckets:
            parts = ", ".join(f"<={t}: {b.within[t]}" for t in inputs.thresholds)
            summary.append(f"phonetic {b.market}: {parts} of {b.total}")
    else:
        skipped.append("phonetic threshold table: no similarity results given")

    text = "\n".join(summary + [f"skipped: {s}" for s in skipped]) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    written.append(out / "summary.txt")
    return written, skipped
