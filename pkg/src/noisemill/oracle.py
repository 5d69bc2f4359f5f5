"""Brute-force recoverability checks and a baseline attribute repairer.

verify_ledger proves the central data invariant: every controlled
corruption can be undone from the corrupted object's remaining facets.
recover_attributes is the constructive counterpart for the tabular
facet: exhaustive candidate search over allowed values and aliases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .noising import (
    FACETS,
    CorruptionLedger,
    _facet_texts,
    _needle_pattern,
    _top_facet,
    evidence_needles,
    find_evidence,
)
from .objects import MalformedObject, Schema, StructuredObject, parse

class LedgerMismatch(ValueError):
    """Ledger does not correspond to the given corpus record(s)."""


@dataclass
class VerificationReport:
    entries_checked: int = 0
    passed: int = 0
    failed: int = 0
    skipped_soup: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def merge(self, other: "VerificationReport") -> None:
        self.entries_checked += other.entries_checked
        self.passed += other.passed
        self.failed += other.failed
        self.skipped_soup += other.skipped_soup
        self.failures.extend(other.failures)

    def to_dict(self) -> dict:
        return {
            "entries_checked": self.entries_checked,
            "passed": self.passed,
            "failed": self.failed,
            "skipped_soup": self.skipped_soup,
            "failures": self.failures,
        }


def _tokens_present(form: str, soup_text: str) -> bool:
    # Shuffling separates multi-word forms, so check each word on its own;
    # boundary matching copes with clinging sentence punctuation.
    tokens = form.split()
    return bool(tokens) and all(_needle_pattern(t).search(soup_text) for t in tokens)


def verify_ledger(
    input_text: str,
    ledger: CorruptionLedger,
    schema: Schema,
    record_index: int | None = None,
) -> VerificationReport:
    """Re-derive evidence for every controlled entry of one record.

    Soup records get no span verification (structure is destroyed); their
    controlled entries are counted as skipped after a weaker check that
    the original value's tokens (or an alias's) survive in the soup. A
    weak-check miss counts as a failure instead.
    """
    report = VerificationReport()
    controlled = [e for e in ledger.entries if e.controlled]
    for entry in controlled:
        if entry.facet not in FACETS:
            raise LedgerMismatch(f"ledger references unknown facet {entry.facet!r}")

    if ledger.soup_applied:
        for entry in controlled:
            report.entries_checked += 1
            value, aliases = evidence_needles(schema, entry.payload["name"], entry.payload["original"])
            if any(_tokens_present(form, input_text) for form in (value, *aliases)):
                report.skipped_soup += 1
            else:
                report.failed += 1
                report.failures.append(_failure(record_index, entry, "soup_token_miss"))
        return report

    try:
        corrupted = parse(input_text)
    except MalformedObject as exc:
        raise LedgerMismatch(f"non-soup input does not parse: {exc}") from exc

    for entry in controlled:
        report.entries_checked += 1
        value, aliases = evidence_needles(schema, entry.payload["name"], entry.payload["original"])
        found = find_evidence(value, aliases, corrupted, entry.facet, schema)
        if found:
            report.passed += 1
        else:
            report.failed += 1
            report.failures.append(_failure(record_index, entry, "no_evidence"))
    return report


def _failure(record_index: int | None, entry, kind: str) -> dict:
    out = {
        "kind": kind,
        "facet": entry.facet,
        "op": entry.op,
        "name": entry.payload.get("name"),
        "original": entry.payload.get("original"),
    }
    if record_index is not None:
        out["record_index"] = record_index
    return out


def _free_form_matches(obj: StructuredObject, form: str):
    """(match length, facet rank, start) hits over title/bullets/description."""
    pattern = _needle_pattern(form)
    for rank, (facet_id, text) in enumerate(_facet_texts(obj)):
        if _top_facet(facet_id) == "attributes" or not text:
            continue
        for m in pattern.finditer(text):
            yield m.end() - m.start(), rank, m.start()


def recover_attributes(obj: StructuredObject, schema: Schema) -> dict[str, str]:
    """Propose canonical repairs for missing or enumeration-violating attributes.

    Candidates are every allowed value and alias of the attribute; the
    winner is the longest free-form match, breaking ties by earliest
    position (facet order, then offset), then candidate order.
    """
    proposals: dict[str, str] = {}
    for spec in schema.attribute_specs:
        value = obj.attributes.get(spec.name)
        missing = spec.name not in obj.attributes
        violating = (
            not missing
            and spec.value_kind == "enumeration"
            and value not in spec.allowed_values
        )
        if not (missing or violating):
            continue
        best: tuple | None = None
        for order, canonical in enumerate(spec.canonical_candidates()):
            for form in spec.surface_forms(canonical):
                for length, rank, start in _free_form_matches(obj, form):
                    key = (-length, rank, start, order)
                    if best is None or key < best[0]:
                        best = (key, canonical)
        if best is not None:
            proposals[spec.name] = best[1]
    return proposals


def apply_recoveries(obj: StructuredObject, schema: Schema) -> StructuredObject:
    """Object with the oracle's proposed repairs merged in."""
    proposals = recover_attributes(obj, schema)
    if not proposals:
        return obj
    attrs = dict(obj.attributes)
    attrs.update(proposals)
    return obj.replace(attributes=attrs)
