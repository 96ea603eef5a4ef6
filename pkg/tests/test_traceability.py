import pytest
from hypothesis import given, strategies as st

from oracles import oracle_coverage, oracle_verdict
from skilltrace.corpus import (
    GoldVerdict, PERMISSIONS, PermissionClass as P, SkillRecord, TraceabilityGoldRecord, load_tbpd,
)
from skilltrace.errors import ContractViolation
from skilltrace.textprep import PreprocessedPolicy
from skilltrace.traceability import (
    Coverage, Verdict, coverage, coverage_rule, detect_reused_policies, evaluate_against_gold,
    extract_declared, vet_declared, vet_skill, DeclaredPractices,
)


def _skill(perms, text=None, url="https://x.example/p", sid="B01", dev="d"):
    return SkillRecord(skill_id=sid, market="US", name="n", developer=dev, category="c",
                       permissions=tuple(perms), policy_url=url, policy_text=text)


def test_extract_declared(label_classifier):
    clf = label_classifier({"a": {P.DEVICE_ADDRESS}, "b": {P.NONE, P.EMAIL_ADDRESS}})
    pol = PreprocessedPolicy("p", ("a",), 0, (0,))
    d = extract_declared(pol, clf)
    assert d.classes == {P.DEVICE_ADDRESS} and not d.none_fired
    assert d.evidence[P.DEVICE_ADDRESS] == [("a", 0)]
    d = extract_declared(PreprocessedPolicy("p", ("b",), 0, (0,)), clf)
    assert d.classes == frozenset() and d.none_fired
    d = extract_declared(PreprocessedPolicy("p", (), 0, ()), clf)
    assert d.classes == frozenset() and not d.none_fired


@pytest.mark.parametrize("req,declared,expected", [
    (P.DEVICE_COUNTRY_POSTAL_CODE, {P.DEVICE_ADDRESS}, Coverage.FULL),
    (P.NAME, {P.PERSONAL_INFORMATION}, Coverage.PARTIAL_COVERAGE),
    (P.EMAIL_ADDRESS, set(), Coverage.UNCOVERED),
    (P.DEVICE_ADDRESS, {P.DEVICE_COUNTRY_POSTAL_CODE}, Coverage.PARTIAL_COVERAGE),
    (P.PERSONAL_INFORMATION, {P.PERSONAL_INFORMATION}, Coverage.FULL),
    (P.PERSONAL_INFORMATION, {P.NAME}, Coverage.UNCOVERED),
])
def test_coverage_examples(req, declared, expected):
    assert coverage(req, frozenset(declared)) is expected


def test_coverage_rejects_none():
    with pytest.raises(ContractViolation):
        coverage(P.NONE, frozenset())


def test_named_rule_for_covered_rows():
    for r in PERMISSIONS:
        for d in ({P.PERSONAL_INFORMATION}, {P.DEVICE_ADDRESS}, {r}):
            cov, rule = coverage_rule(r, frozenset(d))
            if cov is not Coverage.UNCOVERED:
                assert rule.startswith("R") and rule[:2] != "R6"


declared_st = st.frozensets(st.sampled_from(PERMISSIONS))


@given(st.sampled_from(PERMISSIONS), declared_st)
def test_coverage_matches_oracle(req, declared):
    names = {Coverage.FULL: "full", Coverage.PARTIAL_COVERAGE: "partial", Coverage.UNCOVERED: "uncovered"}
    assert names[coverage(req, declared)] == oracle_coverage(req, declared)
    if req in declared:
        assert coverage(req, declared) is Coverage.FULL


@given(st.frozensets(st.sampled_from(PERMISSIONS), min_size=1), declared_st, st.sampled_from(PERMISSIONS))
def test_verdict_monotone(requested, declared, extra):
    before = vet_declared(requested, DeclaredPractices(declared)).verdict
    after = vet_declared(requested, DeclaredPractices(declared | {extra})).verdict
    assert after.rank >= before.rank
    assert before.value == oracle_verdict(requested, declared)


def test_vet_skill_examples(ensemble, label_classifier):
    radar = _skill(["Device Address"], "Aircraft radar uses your devices address to find your location.")
    assert vet_skill(radar, ensemble).verdict is Verdict.COMPLETE

    no_policy = vet_skill(_skill(["Device Country and Postal Code"], None, url=None), ensemble)
    assert (no_policy.verdict, no_policy.reason) == (Verdict.BROKEN, "no_policy")
    assert all(r.coverage is Coverage.UNCOVERED for r in no_policy.rows)

    dead = vet_skill(_skill(["Email Address"], None), ensemble)
    assert (dead.verdict, dead.reason) == (Verdict.BROKEN, "dead_link")

    empty = vet_skill(_skill(["Email Address"], "<p>Contact us.</p>"), ensemble)
    assert (empty.verdict, empty.reason) == (Verdict.BROKEN, "empty_policy")

    clf = label_classifier({"we collect your full name here.": {P.NAME}})
    mixed = vet_skill(_skill(["Customer Name", "Email Address"], "We collect your full name here."), clf)
    assert mixed.verdict is Verdict.PARTIAL

    na = vet_skill(_skill(["Reminders"], "anything at all here."), clf)
    assert na.verdict is Verdict.NOT_APPLICABLE and na.rows == ()


def test_verdict_json_has_evidence(label_classifier):
    clf = label_classifier({"we collect your full name here.": {P.NAME}})
    v = vet_skill(_skill(["Customer Name"], "Cookies are used on the site. We collect your full name here."), clf)
    doc = v.to_json("B01", "US")
    assert doc["verdict"] == "complete"
    assert doc["rows"][0] == {"requested": "Name", "coverage": "full", "rule": "R1:declared", "evidence": [1]}


def _gold(sid, perms, text, verdict):
    return TraceabilityGoldRecord(sid, "US", tuple(perms), text, verdict)


def test_evaluate_against_gold_marginals(label_classifier):
    clf = label_classifier({"we collect your email address today.": {P.EMAIL_ADDRESS}})
    gold = [
        _gold("B1", ["Email Address"], "We collect your email address today.", GoldVerdict.COMPLETE),
        _gold("B2", ["Email Address"], "", GoldVerdict.BROKEN),
        _gold("B3", ["Email Address", "Customer Name"], "We collect your email address today.",
              GoldVerdict.COMPLETE),
        _gold("B4", ["Reminders"], "We collect your email address today.", GoldVerdict.PARTIAL),
    ]
    ev = evaluate_against_gold(gold, clf)
    assert ev.total == 4 and ev.correct == 2
    assert ev.count(Verdict.NOT_APPLICABLE, GoldVerdict.PARTIAL) == 1
    assert sum(ev.row_total(v) for v in Verdict) == ev.total
    assert sum(ev.column_total(g) for g in GoldVerdict) == ev.total
    assert ev.recall(GoldVerdict.BROKEN) == 1.0
    trimmed = evaluate_against_gold(gold, clf, include_trivial=False)
    assert trimmed.total == 3 and trimmed.excluded == 1
    single = evaluate_against_gold(gold[:1], clf)
    assert single.accuracy == 1.0


def test_golden_mini_corpus_with_perfect_rules(data_dir, ensemble):
    gold = load_tbpd(data_dir / "gold_mini_tbpd.jsonl")
    counts = {v: sum(1 for g in gold if g.gold_verdict is v) for v in GoldVerdict}
    assert counts == {GoldVerdict.BROKEN: 12, GoldVerdict.PARTIAL: 8, GoldVerdict.COMPLETE: 10}


def test_detect_reused_policies():
    a = _skill(["Customer Name"], "x", url=" https://same.example/p ", sid="B1", dev="Alpha")
    b = _skill(["Email Address"], "x", url="https://same.example/p", sid="B2", dev="Beta")
    c = _skill([], "x", url="https://other.example/p", sid="B3")
    groups = detect_reused_policies([a, b, c])
    assert len(groups) == 1
    g = groups[0]
    assert g.skill_ids == ("B1", "B2") and g.cross_developer and g.mixed_permissions
    assert detect_reused_policies([a, c]) == []
    # one skill listed in two markets is not reuse
    a_uk = SkillRecord(skill_id="B1", market="UK", name="n", developer="Alpha", category="c",
                       policy_url="https://same.example/p")
    assert detect_reused_policies([a, a_uk]) == []
