"""Pair-level evaluation: Rouge-L F1 per facet, attribute precision and
recall, fuzzy value accuracy, and rule-based quality flags.

All scores live in [0, 1] internally; exported dictionaries scale the
numeric fields by 100, matching how such tables are usually reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .objects import CategoryMismatch, Schema, StructuredObject

TITLE_FLAGS = ("too_long", "too_short", "restricted_phrase", "all_caps")
BULLET_FLAGS = ("duplicate_bullets", "empty_bullet", "over_count", "over_length")


class UndefinedMetric(ValueError):
    """Metric has no defined value for these inputs (reported as n/a)."""


class EmptyInput(ValueError):
    """Aggregation over zero reports."""


def _tokens(text: str) -> list[str]:
    return text.casefold().split()


def _intern(a: Sequence[str], b: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    enc_a = np.fromiter((ids.setdefault(t, len(ids)) for t in a), dtype=np.int64, count=len(a))
    enc_b = np.fromiter((ids.setdefault(t, len(ids)) for t in b), dtype=np.int64, count=len(b))
    return enc_a, enc_b


def rouge_l_f1(reference: str, candidate: str) -> float:
    """Token-level LCS F1 over case-folded whitespace tokens."""
    ref = _tokens(reference)
    cand = _tokens(candidate)
    if not ref or not cand:
        return 0.0
    enc_ref, enc_cand = _intern(ref, cand)
    lcs = kernels.lcs_length(enc_ref, enc_cand)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def fold(text: str) -> str:
    return " ".join(text.casefold().split())


def _levenshtein_text(a: str, b: str) -> int:
    enc_a = np.fromiter((ord(c) for c in a), dtype=np.int64, count=len(a))
    enc_b = np.fromiter((ord(c) for c in b), dtype=np.int64, count=len(b))
    return kernels.levenshtein(enc_a, enc_b)


def fuzzy_match(
    a: str,
    b: str,
    threshold: float = 0.9,
    aliases: Mapping[str, Sequence[str]] | None = None,
) -> bool:
    """Alias-aware fuzzy equality of two attribute values.

    Alias groups are consulted first: values folding into the same
    canonical group match outright. Otherwise match when the normalized
    Levenshtein similarity of the folded strings reaches the threshold.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    fa, fb = fold(a), fold(b)
    if aliases:
        for canonical, variants in aliases.items():
            group = {fold(canonical), *(fold(v) for v in variants)}
            if fa in group and fb in group:
                return True
    if fa == fb:
        return True
    longest = max(len(fa), len(fb))
    similarity = 1.0 - _levenshtein_text(fa, fb) / longest
    return similarity >= threshold


def attribute_precision(
    generated: Mapping[str, str],
    reference: Mapping[str, str],
    matcher: Callable[[str, str, str], bool],
) -> float:
    """Correctly generated attributes over generated attributes.

    matcher(name, generated value, reference value) decides correctness.
    """
    if not generated:
        raise UndefinedMetric("no generated attributes")
    correct = sum(
        1
        for name, value in generated.items()
        if name in reference and matcher(name, value, reference[name])
    )
    return correct / len(generated)


def attribute_recall(generated: Mapping[str, str], required: Sequence[str]) -> float:
    """Generated required attributes over required attributes."""
    if not required:
        raise UndefinedMetric("no required attributes")
    hit = len(set(generated) & set(required))
    return hit / len(required)


@dataclass(frozen=True)
class TitleRules:
    max_chars: int = 200
    min_words: int = 2
    restricted_phrases: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, raw: Mapping) -> "TitleRules":
        return cls(
            max_chars=int(raw.get("max_chars", 200)),
            min_words=int(raw.get("min_words", 2)),
            restricted_phrases=tuple(raw.get("restricted_phrases", ())),
        )


@dataclass(frozen=True)
class BulletRules:
    max_count: int = 10
    max_chars_per_bullet: int = 255

    @classmethod
    def from_dict(cls, raw: Mapping) -> "BulletRules":
        return cls(
            max_count=int(raw.get("max_count", 10)),
            max_chars_per_bullet=int(raw.get("max_chars_per_bullet", 255)),
        )


def title_quality(title: str, rules: TitleRules = TitleRules()) -> frozenset[str]:
    flags = set()
    if len(title) > rules.max_chars:
        flags.add("too_long")
    if len(title.split()) < rules.min_words:
        flags.add("too_short")
    folded = fold(title)
    if any(fold(p) in folded for p in rules.restricted_phrases if p):
        flags.add("restricted_phrase")
    letters = [c for c in title if c.isalpha()]
    if letters and all(c.isupper() for c in letters):
        flags.add("all_caps")
    return frozenset(flags)


def bullet_quality(bullets: Sequence[str], rules: BulletRules = BulletRules()) -> frozenset[str]:
    flags = set()
    folded = [fold(b) for b in bullets]
    if len(set(folded)) != len(folded):
        flags.add("duplicate_bullets")
    if any(not b.strip() for b in bullets):
        flags.add("empty_bullet")
    if len(bullets) > rules.max_count:
        flags.add("over_count")
    if any(len(b) > rules.max_chars_per_bullet for b in bullets):
        flags.add("over_length")
    return frozenset(flags)


@dataclass(frozen=True)
class EvalThresholds:
    fuzzy_threshold: float = 0.9
    title_rules: TitleRules = field(default_factory=TitleRules)
    bullet_rules: BulletRules = field(default_factory=BulletRules)
    join_attribute: str | None = None

    @classmethod
    def from_dict(cls, raw: Mapping) -> "EvalThresholds":
        known = {"fuzzy_threshold", "title_rules", "bullet_rules", "join_attribute"}
        stray = set(raw) - known
        if stray:
            raise ValueError(f"unknown threshold fields: {sorted(stray)}")
        return cls(
            fuzzy_threshold=float(raw.get("fuzzy_threshold", 0.9)),
            title_rules=TitleRules.from_dict(raw.get("title_rules", {})),
            bullet_rules=BulletRules.from_dict(raw.get("bullet_rules", {})),
            join_attribute=raw.get("join_attribute"),
        )

    @classmethod
    def load(cls, path: str) -> "EvalThresholds":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class MetricsReport:
    title_rouge_l_f1: float
    bullets_rouge_l_f1: float
    description_rouge_l_f1: float
    attribute_precision: float | None
    attribute_recall: float
    attribute_accuracy: float | None
    title_quality_flags: frozenset[str] = frozenset()
    bullet_quality_flags: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        def scaled(v: float | None):
            return None if v is None else 100.0 * v

        return {
            "title_rouge_l_f1": scaled(self.title_rouge_l_f1),
            "bullets_rouge_l_f1": scaled(self.bullets_rouge_l_f1),
            "description_rouge_l_f1": scaled(self.description_rouge_l_f1),
            "attribute_precision": scaled(self.attribute_precision),
            "attribute_recall": scaled(self.attribute_recall),
            "attribute_accuracy": scaled(self.attribute_accuracy),
            "title_quality_flags": sorted(self.title_quality_flags),
            "bullet_quality_flags": sorted(self.bullet_quality_flags),
        }


NUMERIC_FIELDS = (
    "title_rouge_l_f1",
    "bullets_rouge_l_f1",
    "description_rouge_l_f1",
    "attribute_precision",
    "attribute_recall",
    "attribute_accuracy",
)


def evaluate_pair(
    reference: StructuredObject,
    candidate: StructuredObject,
    schema: Schema,
    thresholds: EvalThresholds = EvalThresholds(),
) -> MetricsReport:
    """Full metric suite for one (reference, candidate) pair."""
    if reference.category != candidate.category:
        raise CategoryMismatch(
            f"reference is {reference.category!r}, candidate is {candidate.category!r}"
        )

    def matcher(name: str, generated_value: str, reference_value: str) -> bool:
        spec = schema.spec(name)
        aliases = spec.normalization_aliases if spec is not None else None
        return fuzzy_match(generated_value, reference_value, thresholds.fuzzy_threshold, aliases)

    try:
        precision = attribute_precision(candidate.attributes, reference.attributes, matcher)
    except UndefinedMetric:
        precision = None
    recall = attribute_recall(candidate.attributes, schema.required_names)
    if reference.attributes:
        accuracy = sum(
            1
            for name, ref_value in reference.attributes.items()
            if name in candidate.attributes
            and matcher(name, candidate.attributes[name], ref_value)
        ) / len(reference.attributes)
    else:
        accuracy = None

    return MetricsReport(
        title_rouge_l_f1=rouge_l_f1(reference.title, candidate.title),
        bullets_rouge_l_f1=rouge_l_f1(
            "\n".join(reference.feature_bullets), "\n".join(candidate.feature_bullets)
        ),
        description_rouge_l_f1=rouge_l_f1(reference.description, candidate.description),
        attribute_precision=precision,
        attribute_recall=recall,
        attribute_accuracy=accuracy,
        title_quality_flags=title_quality(candidate.title, thresholds.title_rules),
        bullet_quality_flags=bullet_quality(candidate.feature_bullets, thresholds.bullet_rules),
    )


def aggregate(reports: Iterable[MetricsReport]) -> dict:
    """Corpus-level means (over defined values) and flag rates, in [0, 1]."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("nothing to aggregate")
    out: dict = {"count": len(reports)}
    for name in NUMERIC_FIELDS:
        values = [getattr(r, name) for r in reports]
        defined = [v for v in values if v is not None]
        out[name] = {
            "mean": sum(defined) / len(defined) if defined else None,
            "defined": len(defined),
            "n_a": len(values) - len(defined),
        }
    for kind, flag_names in (("title", TITLE_FLAGS), ("bullet", BULLET_FLAGS)):
        rates = {}
        for flag in flag_names:
            hits = sum(1 for r in reports if flag in getattr(r, f"{kind}_quality_flags"))
            rates[flag] = hits / len(reports)
        out[f"{kind}_quality_flag_rates"] = rates
    return out


def aggregate_to_dict(agg: Mapping) -> dict:
    """Aggregate with numeric means scaled by 100 for reporting."""
    out = dict(agg)
    for name in NUMERIC_FIELDS:
        entry = dict(out[name])
        if entry["mean"] is not None:
            entry["mean"] = 100.0 * entry["mean"]
        out[name] = entry
    return out
