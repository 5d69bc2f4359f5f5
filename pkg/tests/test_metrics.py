from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisemill.metrics import (
    BulletRules,
    EmptyInput,
    EvalThresholds,
    MetricsReport,
    TitleRules,
    UndefinedMetric,
    aggregate,
    aggregate_to_dict,
    attribute_precision,
    attribute_recall,
    bullet_quality,
    evaluate_pair,
    fuzzy_match,
    rouge_l_f1,
    title_quality,
)
from noisemill.objects import CategoryMismatch, StructuredObject


def lcs_oracle(a, b) -> int:
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[len(a)][len(b)]


def rouge_oracle(reference: str, candidate: str) -> float:
    ref, cand = reference.casefold().split(), candidate.casefold().split()
    if not ref or not cand:
        return 0.0
    lcs = lcs_oracle(ref, cand)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return 2 * p * r / (p + r)


# --- rouge ------------------------------------------------------------------

def test_rouge_identity():
    assert rouge_l_f1("red cotton shirt", "red cotton shirt") == 1.0


def test_rouge_disjoint():
    assert rouge_l_f1("alpha beta", "gamma delta") == 0.0


def test_rouge_empty_sides():
    assert rouge_l_f1("", "anything") == 0.0
    assert rouge_l_f1("anything", "") == 0.0
    assert rouge_l_f1("", "") == 0.0


def test_rouge_worked_example():
    # L=2, P=2/2, R=2/3 -> F1 = 0.8
    assert abs(rouge_l_f1("red cotton shirt", "red shirt") - 0.8) < 1e-12


def test_rouge_case_folded():
    assert rouge_l_f1("Red Shirt", "red shirt") == 1.0


token = st.text(alphabet="abc", min_size=1, max_size=3)
phrase = st.lists(token, min_size=0, max_size=12).map(" ".join)


@given(phrase, phrase)
@settings(max_examples=300, deadline=None)
def test_rouge_matches_oracle(a, b):
    assert rouge_l_f1(a, b) == rouge_oracle(a, b)


# --- precision / recall --------------------------------------------------------

def exact(name, a, b):
    return a == b


def test_precision_worked_example():
    generated = {"a": "1", "b": "2", "c": "3", "d": "9"}
    reference = {"a": "1", "b": "2", "c": "3", "d": "4"}
    assert attribute_precision(generated, reference, exact) == 0.75


def test_precision_identical_maps():
    m = {"a": "1", "b": "2"}
    assert attribute_precision(m, m, exact) == 1.0


def test_precision_undefined_on_empty():
    with pytest.raises(UndefinedMetric):
        attribute_precision({}, {"a": "1"}, exact)


def test_recall_worked_examples():
    assert attribute_recall({"a": "x", "b": "y"}, ["a", "b", "c", "d", "e"]) == 0.4
    assert attribute_recall({"a": "x", "b": "y", "extra": "z"}, ["a", "b"]) == 1.0
    assert attribute_recall({}, ["a"]) == 0.0
    with pytest.raises(UndefinedMetric):
        attribute_recall({"a": "x"}, [])


def test_precision_recall_exhaustive_small_maps():
    # every attribute map of size <= 3 over a 3-value universe, checked
    # against direct counting
    names = ("n1", "n2", "n3")
    values = ("v1", "v2", "v3")
    maps = [{}]
    for size in (1, 2, 3):
        for chosen in itertools.combinations(names, size):
            for vals in itertools.product(values, repeat=size):
                maps.append(dict(zip(chosen, vals)))
    required = ["n1", "n2"]
    for generated in maps:
        for reference in maps:
            correct = sum(
                1 for n, v in generated.items() if n in reference and reference[n] == v
            )
            if generated:
                assert attribute_precision(generated, reference, exact) == correct / len(generated)
            hit = sum(1 for n in required if n in generated)
            assert attribute_recall(generated, required) == hit / len(required)


# --- fuzzy match ------------------------------------------------------------------

def test_fuzzy_fold_equality_any_threshold():
    assert fuzzy_match("Red", "red", threshold=1.0)
    assert fuzzy_match("two  words", "two words", threshold=1.0)


def test_fuzzy_worked_example():
    # distance 1 over max length 6: similarity 5/6
    assert fuzzy_match("cotton", "cottn", threshold=0.8)
    assert not fuzzy_match("cotton", "cottn", threshold=0.9)


def test_fuzzy_alias_hit():
    aliases = {"red": ("crimson",)}
    assert fuzzy_match("red", "crimson", threshold=1.0, aliases=aliases)
    assert fuzzy_match("crimson", "red", threshold=1.0, aliases=aliases)
    assert not fuzzy_match("blue", "crimson", threshold=1.0, aliases=aliases)


def test_fuzzy_symmetric_reflexive():
    for a, b in [("abc", "abd"), ("", "x"), ("same", "same")]:
        assert fuzzy_match(a, b, 0.5) == fuzzy_match(b, a, 0.5)
        assert fuzzy_match(a, a, 1.0)


def test_fuzzy_threshold_domain():
    with pytest.raises(ValueError):
        fuzzy_match("a", "b", threshold=1.5)


# --- quality flags -------------------------------------------------------------------

def test_title_flags():
    assert title_quality(("word " * 41).strip()) == {"too_long"}  # 245 chars
    assert title_quality("word") == {"too_short"}
    assert title_quality("Buy now with free shipping", TitleRules(restricted_phrases=("free shipping",))) == {"restricted_phrase"}
    assert title_quality("LOUD STEEL KETTLE") == {"all_caps"}
    assert title_quality("Calm Steel Kettle") == frozenset()


def test_bullet_flags():
    assert bullet_quality(("a", "a")) == {"duplicate_bullets"}
    assert bullet_quality(("a", "A ")) == {"duplicate_bullets"}  # case-folded equality
    assert bullet_quality(tuple(str(i) for i in range(11))) == {"over_count"}
    assert bullet_quality(("ok", "")) == {"empty_bullet"}
    assert bullet_quality(("y" * 256,)) == {"over_length"}
    assert bullet_quality(("clean", "list")) == frozenset()


# --- evaluate_pair ------------------------------------------------------------------

def test_evaluate_identity(shirt, shirt_schema):
    report = evaluate_pair(shirt, shirt, shirt_schema)
    assert report.title_rouge_l_f1 == 1.0
    assert report.bullets_rouge_l_f1 == 1.0
    assert report.description_rouge_l_f1 == 1.0
    assert report.attribute_precision == 1.0
    assert report.attribute_accuracy == 1.0
    required = set(shirt_schema.required_names)
    assert report.attribute_recall == len(required & set(shirt.attributes)) / len(required)
    assert report.title_quality_flags == frozenset()
    assert report.bullet_quality_flags == frozenset()


def test_evaluate_empty_candidate_attributes(shirt, shirt_schema):
    candidate = shirt.replace(attributes={})
    report = evaluate_pair(shirt, candidate, shirt_schema)
    assert report.attribute_precision is None
    assert report.attribute_recall == 0.0
    assert report.attribute_accuracy == 0.0


def test_evaluate_alias_counts_as_accurate(shirt, shirt_schema):
    candidate = shirt.replace(attributes={**shirt.attributes, "color": "crimson"})
    report = evaluate_pair(shirt, candidate, shirt_schema)
    assert report.attribute_accuracy == 1.0


def test_evaluate_category_mismatch(shirt, shirt_schema):
    with pytest.raises(CategoryMismatch):
        evaluate_pair(shirt, shirt.replace(category="mug"), shirt_schema)


def test_report_dict_scales_by_100(shirt, shirt_schema):
    d = evaluate_pair(shirt, shirt, shirt_schema).to_dict()
    assert d["title_rouge_l_f1"] == 100.0
    assert isinstance(d["title_quality_flags"], list)


# --- aggregate -----------------------------------------------------------------------

def make_report(**overrides) -> MetricsReport:
    base = dict(
        title_rouge_l_f1=1.0, bullets_rouge_l_f1=1.0, description_rouge_l_f1=1.0,
        attribute_precision=1.0, attribute_recall=1.0, attribute_accuracy=1.0,
    )
    base.update(overrides)
    return MetricsReport(**base)


def test_aggregate_single_report_is_itself():
    agg = aggregate([make_report(attribute_precision=0.8)])
    assert agg["attribute_precision"]["mean"] == 0.8
    assert agg["count"] == 1


def test_aggregate_mean():
    agg = aggregate([make_report(attribute_precision=0.8), make_report(attribute_precision=1.0)])
    assert abs(agg["attribute_precision"]["mean"] - 0.9) < 1e-12


def test_aggregate_skips_undefined():
    agg = aggregate([make_report(attribute_precision=0.8), make_report(attribute_precision=None)])
    assert agg["attribute_precision"] == {"mean": 0.8, "defined": 1, "n_a": 1}


def test_aggregate_flag_rates():
    flagged = make_report(title_quality_flags=frozenset({"too_short"}))
    agg = aggregate([flagged, make_report()])
    assert agg["title_quality_flag_rates"]["too_short"] == 0.5


def test_aggregate_empty_input():
    with pytest.raises(EmptyInput):
        aggregate([])


def test_aggregate_to_dict_scaling():
    agg = aggregate_to_dict(aggregate([make_report(attribute_precision=0.8)]))
    assert agg["attribute_precision"]["mean"] == 80.0


def test_thresholds_from_dict():
    t = EvalThresholds.from_dict({
        "fuzzy_threshold": 0.8,
        "title_rules": {"max_chars": 60},
        "bullet_rules": {"max_count": 5},
        "join_attribute": "sku",
    })
    assert t.fuzzy_threshold == 0.8
    assert t.title_rules.max_chars == 60
    assert t.bullet_rules == BulletRules(max_count=5)
    assert t.join_attribute == "sku"
    with pytest.raises(ValueError):
        EvalThresholds.from_dict({"nope": 1})
