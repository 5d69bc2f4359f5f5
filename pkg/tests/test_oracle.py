from __future__ import annotations

import pytest

from noisemill.noising import (
    CREATIVE,
    GROUNDED,
    CorruptionLedger,
    LedgerEntry,
    NoiseConfig,
    corrupt,
    record_seed,
)
from noisemill.objects import AttributeSpec, Schema, StructuredObject, parse, serialize
from noisemill.oracle import (
    LedgerMismatch,
    apply_recoveries,
    recover_attributes,
    verify_ledger,
)
from noisemill.rng import spawn
from noisemill.synth import generate_objects, generate_schemas


@pytest.fixture(scope="module")
def small_world():
    schemas = generate_schemas(3, spawn(55, "schemas"))
    objects = generate_objects(schemas, 200, seed=55)
    return {s.category: s for s in schemas}, objects


# --- verify_ledger -----------------------------------------------------------

def test_empty_ledger_passes(shirt, shirt_schema):
    report = verify_ledger(serialize(shirt), CorruptionLedger(), shirt_schema)
    assert report.ok and report.entries_checked == 0


def test_grounded_corpus_all_pass(small_world):
    by_cat, objects = small_world
    cfg = NoiseConfig(seed=13, mode=GROUNDED)
    checked = 0
    for i, obj in enumerate(objects):
        schema = by_cat[obj.category]
        text, ledger = corrupt(obj, schema, cfg, record_seed(13, i))
        report = verify_ledger(text, ledger, schema, i)
        assert report.failed == 0, report.failures
        checked += report.entries_checked
    assert checked > 100


def test_creative_corpus_failures_counted_not_fatal(small_world):
    by_cat, objects = small_world
    cfg = NoiseConfig(seed=14, mode=CREATIVE, soup_probability=0.0)
    failed = 0
    for i, obj in enumerate(objects):
        schema = by_cat[obj.category]
        text, ledger = corrupt(obj, schema, cfg, record_seed(14, i))
        report = verify_ledger(text, ledger, schema, i)
        failed += report.failed
    assert failed > 0


def test_verify_detects_planted_failure(shirt, shirt_schema):
    corrupted = shirt.replace(
        title="Plain Crew Top",
        feature_bullets=(),
        description="Nothing to see.",
        attributes={"material": "cotton"},
    )
    entry = LedgerEntry(
        facet="attributes", op="drop_attribute", intensity=0.5,
        payload={"name": "color", "original": "red"}, controlled=True,
    )
    report = verify_ledger(serialize(corrupted), CorruptionLedger(entries=[entry]), shirt_schema)
    assert report.failed == 1
    assert report.failures[0]["kind"] == "no_evidence"


def test_verify_soup_weak_check(shirt, shirt_schema):
    entry = LedgerEntry(
        facet="attributes", op="drop_attribute", intensity=0.5,
        payload={"name": "color", "original": "red"}, controlled=True,
    )
    ledger = CorruptionLedger(entries=[entry], soup_applied=True)
    ok = verify_ledger("tone deep a in red. comes", ledger, shirt_schema)
    assert ok.skipped_soup == 1 and ok.failed == 0
    # alias tokens also satisfy the weak check
    ok = verify_ledger("crimson something", ledger, shirt_schema)
    assert ok.skipped_soup == 1 and ok.failed == 0
    miss = verify_ledger("no color words at all", ledger, shirt_schema)
    assert miss.failed == 1 and miss.failures[0]["kind"] == "soup_token_miss"


def test_verify_rejects_unknown_facet(shirt, shirt_schema):
    entry = LedgerEntry(
        facet="sidecar", op="drop_attribute", intensity=0.1,
        payload={"name": "color", "original": "red"}, controlled=True,
    )
    with pytest.raises(LedgerMismatch):
        verify_ledger(serialize(shirt), CorruptionLedger(entries=[entry]), shirt_schema)


def test_verify_rejects_unparseable_non_soup(shirt_schema):
    entry = LedgerEntry(
        facet="attributes", op="drop_attribute", intensity=0.1,
        payload={"name": "color", "original": "red"}, controlled=True,
    )
    with pytest.raises(LedgerMismatch):
        verify_ledger("word salad without soup flag", CorruptionLedger(entries=[entry]), shirt_schema)


# --- recover_attributes ---------------------------------------------------------

def test_recover_single_candidate(shirt_schema):
    obj = StructuredObject(
        category="shirt", title="Red Cotton Shirt", attributes={"material": "cotton"}
    )
    assert recover_attributes(obj, shirt_schema)["color"] == "red"


def test_recover_nothing_when_absent(shirt_schema):
    obj = StructuredObject(
        category="shirt", title="Nice Top", attributes={"material": "cotton"}
    )
    assert "color" not in recover_attributes(obj, shirt_schema)


def test_recover_earliest_position_tie_break(shirt_schema):
    obj = StructuredObject(
        category="shirt",
        description="it reads blue in daylight and red at night",
        attributes={"material": "cotton"},
    )
    assert recover_attributes(obj, shirt_schema)["color"] == "blue"


def test_recover_longest_match_first():
    schema = Schema(category="c", attribute_specs=(
        AttributeSpec(
            name="shade", value_kind="enumeration",
            allowed_values=("red", "brick red"), required=True,
        ),
    ))
    obj = StructuredObject(
        category="c", description="a red base coat under brick red trim",
        attributes={},
    )
    # "brick red" (9 chars) beats the earlier bare "red"
    assert recover_attributes(obj, schema)["shade"] == "brick red"


def test_recover_via_alias_maps_to_canonical(shirt_schema):
    obj = StructuredObject(
        category="shirt", description="a crimson weave", attributes={}
    )
    assert recover_attributes(obj, shirt_schema)["color"] == "red"


def test_recover_repairs_enum_violation(shirt_schema):
    obj = StructuredObject(
        category="shirt", title="Red Cotton Shirt",
        attributes={"color": "crimson", "material": "cotton"},
    )
    assert recover_attributes(obj, shirt_schema)["color"] == "red"


def test_recover_never_proposes_outside_enumeration(small_world):
    by_cat, objects = small_world
    cfg = NoiseConfig(seed=15, soup_probability=0.0)
    for i, obj in enumerate(objects[:100]):
        schema = by_cat[obj.category]
        text, _ = corrupt(obj, schema, cfg, record_seed(15, i))
        proposals = recover_attributes(parse(text), schema)
        for name, value in proposals.items():
            spec = schema.spec(name)
            if spec.value_kind == "enumeration":
                assert value in spec.allowed_values


def test_recover_idempotent_on_complete_objects(small_world):
    by_cat, objects = small_world
    for obj in objects[:50]:
        schema = by_cat[obj.category]
        if set(obj.attributes) == set(schema.names):
            assert recover_attributes(obj, schema) == {}


def test_recover_restores_all_drops(small_world):
    by_cat, objects = small_world
    cfg = NoiseConfig(seed=16, mode=GROUNDED, soup_probability=0.0)
    drops = 0
    for i, obj in enumerate(objects):
        schema = by_cat[obj.category]
        text, ledger = corrupt(obj, schema, cfg, record_seed(16, i))
        proposals = recover_attributes(parse(text), schema)
        for entry in ledger.entries:
            if entry.op == "drop_attribute":
                drops += 1
                assert proposals.get(entry.payload["name"]) == entry.payload["original"]
    assert drops > 20


def test_apply_recoveries_merges(shirt_schema):
    obj = StructuredObject(
        category="shirt", title="Red Cotton Shirt", attributes={"material": "cotton"}
    )
    fixed = apply_recoveries(obj, shirt_schema)
    assert fixed.attributes["color"] == "red"
    assert fixed.attributes["material"] == "cotton"
