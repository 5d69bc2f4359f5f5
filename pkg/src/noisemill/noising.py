"""Targeted, recoverability-controlled noising of catalog objects.

Each facet gets one randomly chosen operation per corruption pass drawn
from a weighted per-facet pool (attributes draw per attribute instead).
Controlled operations (attribute drop/corrupt, title value swap) only
fire in grounded mode when the destroyed information stays evidenced in
the other facets of the *corrupted* object, so every corruption remains
mechanically recoverable. The ledger records what was done, with what
intensity, and where the recovery evidence lives.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .objects import Schema, StructuredObject, serialize, _attribute_order
from .rng import derive_key, spawn

GROUNDED = "grounded"
CREATIVE = "creative"

FACETS = ("title", "feature_bullets", "description", "attributes")

# Ops whose destroyed content must stay recoverable from the rest of the
# corrupted object (grounded mode).
CONTROLLED_OPS = frozenset({"drop_attribute", "corrupt_value", "swap_attribute_mention"})

DEFAULT_POOLS: dict[str, dict[str, float]] = {
    "title": {
        "drop_words": 1.0,
        "truncate_suffix": 1.0,
        "swap_attribute_mention": 1.0,
        "case_mangle": 1.0,
    },
    "feature_bullets": {
        "drop_bullets": 1.0,
        "shuffle_bullets": 1.0,
        "drop_words_within": 1.0,
        "merge_bullets": 1.0,
    },
    "description": {
        "drop_sentences": 1.0,
        "drop_words": 1.0,
    },
    "attributes": {
        "drop_attribute": 1.0,
        "corrupt_value": 1.0,
        "denormalize_value": 1.0,
        "add_spurious_attribute": 0.0,
    },
}

SOUP_STRUCTURAL_CHARS = '{}[]":,'
_SOUP_TABLE = str.maketrans({c: " " for c in SOUP_STRUCTURAL_CHARS})

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class Evidence:
    facet: str
    start: int
    end: int

    def to_list(self) -> list:
        return [self.facet, self.start, self.end]


@dataclass
class LedgerEntry:
    facet: str
    op: str
    intensity: float
    payload: dict
    evidence: list[Evidence] = field(default_factory=list)
    controlled: bool = False

    def to_dict(self) -> dict:
        return {
            "facet": self.facet,
            "op": self.op,
            "intensity": self.intensity,
            "payload": self.payload,
            "evidence": [e.to_list() for e in self.evidence],
            "controlled": self.controlled,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LedgerEntry":
        return cls(
            facet=raw["facet"],
            op=raw["op"],
            intensity=raw["intensity"],
            payload=raw["payload"],
            evidence=[Evidence(f, s, e) for f, s, e in raw.get("evidence", [])],
            controlled=raw.get("controlled", False),
        )


@dataclass
class CorruptionLedger:
    entries: list[LedgerEntry] = field(default_factory=list)
    soup_applied: bool = False

    def to_dict(self) -> dict:
        return {
            "soup_applied": self.soup_applied,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CorruptionLedger":
        return cls(
            entries=[LedgerEntry.from_dict(e) for e in raw.get("entries", [])],
            soup_applied=raw.get("soup_applied", False),
        )


@dataclass(frozen=True)
class NoiseConfig:
    mode: str = GROUNDED
    soup_probability: float = 0.30
    intensity_range: tuple[float, float] = (0.0, 1.0)
    facet_pool_weights: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    seed: int = 0
    bos_mark: str = "<BOS>"
    eos_mark: str = "<EOS>"

    def __post_init__(self) -> None:
        if self.mode not in (GROUNDED, CREATIVE):
            raise ValueError(f"mode must be {GROUNDED!r} or {CREATIVE!r}, got {self.mode!r}")
        if not 0.0 <= self.soup_probability <= 1.0:
            raise ValueError("soup_probability must be in [0, 1]")
        low, high = self.intensity_range
        if not (0.0 <= low <= high <= 1.0):
            raise ValueError("intensity_range must satisfy 0 <= low <= high <= 1")
        object.__setattr__(self, "intensity_range", (float(low), float(high)))
        pools = {}
        for facet, weights in dict(self.facet_pool_weights).items():
            if facet not in FACETS:
                raise ValueError(f"unknown facet {facet!r} in facet_pool_weights")
            weights = {k: float(v) for k, v in dict(weights).items()}
            for op, w in weights.items():
                if op not in DEFAULT_POOLS[facet]:
                    raise ValueError(f"unknown operation {op!r} for facet {facet!r}")
                if w < 0:
                    raise ValueError(f"negative weight for {facet}.{op}")
            # An empty mapping marks the facet exempt; a non-empty one must
            # keep at least one operation live.
            if weights and not any(w > 0 for w in weights.values()):
                raise ValueError(
                    f"facet {facet!r} has no positive-weight operation; "
                    "use an empty mapping to exempt it"
                )
            pools[facet] = weights
        object.__setattr__(self, "facet_pool_weights", pools)

    def pool(self, facet: str) -> dict[str, float]:
        if facet in self.facet_pool_weights:
            return dict(self.facet_pool_weights[facet])
        return dict(DEFAULT_POOLS[facet])

    def to_dict(self) -> dict:
        low, high = self.intensity_range
        return {
            "mode": self.mode,
            "soup_probability": self.soup_probability,
            "intensity_range": {"low": low, "high": high},
            "facet_pool_weights": {f: dict(w) for f, w in self.facet_pool_weights.items()},
            "seed": self.seed,
            "bos_mark": self.bos_mark,
            "eos_mark": self.eos_mark,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "NoiseConfig":
        known = {
            "mode", "soup_probability", "intensity_range", "facet_pool_weights",
            "seed", "bos_mark", "eos_mark",
        }
        stray = set(raw) - known
        if stray:
            raise ValueError(f"unknown noise config fields: {sorted(stray)}")
        kwargs: dict = {k: raw[k] for k in known & set(raw)}
        rng_range = kwargs.pop("intensity_range", None)
        if rng_range is not None:
            kwargs["intensity_range"] = (rng_range["low"], rng_range["high"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "NoiseConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def record_seed(config_seed: int, record_index: int) -> int:
    """Per-record seed; records can be corrupted in any order or in parallel."""
    return derive_key(config_seed, "record", record_index)


def _noise_count(intensity: float, n: int) -> int:
    # floor(intensity * n), with dust guard so 1/3 * 6 counts as 2.
    return int(intensity * n + 1e-9)


@lru_cache(maxsize=4096)
def _needle_pattern(needle: str) -> re.Pattern:
    tokens = [re.escape(t) for t in needle.split()]
    body = r"\s+".join(tokens)
    return re.compile(rf"(?<!\w){body}(?!\w)", re.IGNORECASE)


def _facet_texts(obj: StructuredObject, schema: Schema | None = None):
    """(facet id, text) pairs in canonical scan order."""
    yield "title", obj.title
    for i, bullet in enumerate(obj.feature_bullets):
        yield f"feature_bullets[{i}]", bullet
    yield "description", obj.description
    for name in _attribute_order(obj.attributes, schema):
        yield f"attributes[{name}]", obj.attributes[name]


def _top_facet(facet_id: str) -> str:
    return facet_id.split("[", 1)[0]


def find_evidence(
    value: str,
    aliases: Sequence[str],
    obj: StructuredObject,
    exclude_facet: str,
    schema: Schema | None = None,
) -> list[Evidence]:
    """Token-boundary occurrences of value (or an alias) outside one facet.

    Matching is case-insensitive with whitespace runs normalized; spans
    index into the facet text they were found in.
    """
    if not value:
        raise ValueError("evidence value must be non-empty")
    needles = [value] + [a for a in aliases if a]
    found: list[Evidence] = []
    for facet_id, text in _facet_texts(obj, schema):
        if _top_facet(facet_id) == _top_facet(exclude_facet) or not text:
            continue
        for needle in needles:
            for m in _needle_pattern(needle).finditer(text):
                found.append(Evidence(facet_id, m.start(), m.end()))
    found.sort(key=lambda e: (e.facet, e.start, e.end))
    return found


def _surface_forms(schema: Schema | None, name: str, value: str) -> tuple[str, ...]:
    if schema is None:
        return (value,)
    spec = schema.spec(name)
    if spec is None:
        return (value,)
    return spec.surface_forms(value)


def _weighted_choice(weights: Mapping[str, float], rng: np.random.Generator) -> str | None:
    live = [(name, w) for name, w in sorted(weights.items()) if w > 0]
    if not live:
        return None
    names = [n for n, _ in live]
    probs = np.asarray([w for _, w in live], dtype=np.float64)
    probs /= probs.sum()
    return names[int(rng.choice(len(names), p=probs))]


def _drop_word_positions(words: list[str], k: int, rng: np.random.Generator):
    positions = sorted(int(p) for p in rng.choice(len(words), size=k, replace=False))
    kept = [w for i, w in enumerate(words) if i not in set(positions)]
    removed = [{"index": i, "word": words[i]} for i in positions]
    return kept, removed


def _drop_words_text(text: str, intensity: float, rng: np.random.Generator):
    words = text.split()
    k = _noise_count(intensity, len(words))
    if k <= 0:
        return text, None
    kept, removed = _drop_word_positions(words, k, rng)
    return " ".join(kept), removed


# --- title ---------------------------------------------------------------

def _title_drop_words(title, intensity, rng, ctx):
    new, removed = _drop_words_text(title, intensity, rng)
    if removed is None:
        return title, []
    return new, [LedgerEntry("title", "drop_words", intensity, {"removed": removed})]


def _title_truncate_suffix(title, intensity, rng, ctx):
    words = title.split()
    k = _noise_count(intensity, len(words))
    if k <= 0:
        return title, []
    kept, cut = words[: len(words) - k], words[len(words) - k:]
    payload = {"removed_suffix": " ".join(cut)}
    return " ".join(kept), [LedgerEntry("title", "truncate_suffix", intensity, payload)]


def _title_case_mangle(title, intensity, rng, ctx):
    words = title.split()
    if not words:
        return title, []
    k = max(1, _noise_count(intensity, len(words)))
    positions = sorted(int(p) for p in rng.choice(len(words), size=min(k, len(words)), replace=False))
    mangled = list(words)
    for pos in positions:
        w = words[pos]
        variants = [v for v in (w.upper(), w.lower(), w.capitalize(), w.swapcase()) if v != w]
        if variants:
            mangled[pos] = variants[int(rng.integers(len(variants)))]
    new = " ".join(mangled)
    if new == " ".join(words):
        return title, []
    return new, [LedgerEntry("title", "case_mangle", intensity, {"original": title})]


def _transfer_case(template: str, replacement: str) -> str:
    if template.isupper():
        return replacement.upper()
    if template[:1].isupper():
        return replacement.capitalize()
    return replacement


def _title_swap_candidates(title, ctx):
    """(spec, canonical value, title match) triples, schema order."""
    out = []
    if ctx.schema is None:
        return out
    for spec in ctx.schema.attribute_specs:
        if spec.value_kind != "enumeration" or len(spec.allowed_values) < 2:
            continue
        for value in spec.allowed_values:
            for form in spec.surface_forms(value):
                m = _needle_pattern(form).search(title)
                if m:
                    out.append((spec, value, m))
                    break
    return out


def _title_swap_attribute_mention(title, intensity, rng, ctx):
    candidates = _title_swap_candidates(title, ctx)
    if ctx.mode == GROUNDED:
        candidates = [
            (spec, value, m)
            for spec, value, m in candidates
            if find_evidence(value, spec.surface_forms(value)[1:], ctx.obj, "title", ctx.schema)
        ]
    if not candidates:
        return _title_drop_words(title, intensity, rng, ctx)
    spec, value, m = candidates[int(rng.integers(len(candidates)))]
    others = [v for v in spec.allowed_values if v != value]
    replacement = others[int(rng.integers(len(others)))]
    inserted = _transfer_case(m.group(0), replacement)
    new = title[: m.start()] + inserted + title[m.end():]
    payload = {
        "name": spec.name,
        "original": value,
        "replacement": replacement,
        "start": m.start(),
    }
    entry = LedgerEntry("title", "swap_attribute_mention", intensity, payload, controlled=True)
    return new, [entry]


TITLE_OPS: dict[str, Callable] = {
    "drop_words": _title_drop_words,
    "truncate_suffix": _title_truncate_suffix,
    "swap_attribute_mention": _title_swap_attribute_mention,
    "case_mangle": _title_case_mangle,
}


# --- feature bullets -----------------------------------------------------

def _bullets_drop(bullets, intensity, rng, ctx):
    k = _noise_count(intensity, len(bullets))
    if k <= 0:
        return bullets, []
    positions = sorted(int(p) for p in rng.choice(len(bullets), size=k, replace=False))
    kept = tuple(b for i, b in enumerate(bullets) if i not in set(positions))
    removed = [{"index": i, "text": bullets[i]} for i in positions]
    return kept, [LedgerEntry("feature_bullets", "drop_bullets", intensity, {"removed": removed})]


def _bullets_shuffle(bullets, intensity, rng, ctx):
    order = [int(i) for i in rng.permutation(len(bullets))]
    if order == list(range(len(bullets))):
        return bullets, []
    shuffled = tuple(bullets[i] for i in order)
    return shuffled, [LedgerEntry("feature_bullets", "shuffle_bullets", intensity, {"order": order})]


def _bullets_drop_words_within(bullets, intensity, rng, ctx):
    new = []
    removals = []
    for i, bullet in enumerate(bullets):
        text, removed = _drop_words_text(bullet, intensity, rng)
        new.append(text)
        if removed is not None:
            removals.append({"bullet": i, "removed": removed})
    if not removals:
        return bullets, []
    entry = LedgerEntry("feature_bullets", "drop_words_within", intensity, {"removals": removals})
    return tuple(new), [entry]


def _bullets_merge(bullets, intensity, rng, ctx):
    if len(bullets) < 2:
        return bullets, []
    j = int(rng.integers(len(bullets) - 1))
    merged = bullets[:j] + (bullets[j] + " " + bullets[j + 1],) + bullets[j + 2:]
    return merged, [LedgerEntry("feature_bullets", "merge_bullets", intensity, {"merged_at": j})]


BULLET_OPS: dict[str, Callable] = {
    "drop_bullets": _bullets_drop,
    "shuffle_bullets": _bullets_shuffle,
    "drop_words_within": _bullets_drop_words_within,
    "merge_bullets": _bullets_merge,
}


# --- description ---------------------------------------------------------

def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_BOUNDARY.split(text) if s]


def _description_drop_sentences(text, intensity, rng, ctx):
    sentences = split_sentences(text)
    k = _noise_count(intensity, len(sentences))
    if k <= 0:
        return text, []
    positions = sorted(int(p) for p in rng.choice(len(sentences), size=k, replace=False))
    kept = [s for i, s in enumerate(sentences) if i not in set(positions)]
    removed = [{"index": i, "sentence": sentences[i]} for i in positions]
    entry = LedgerEntry("description", "drop_sentences", intensity, {"removed": removed})
    return " ".join(kept), [entry]


def _description_drop_words(text, intensity, rng, ctx):
    new, removed = _drop_words_text(text, intensity, rng)
    if removed is None:
        return text, []
    return new, [LedgerEntry("description", "drop_words", intensity, {"removed": removed})]


DESCRIPTION_OPS: dict[str, Callable] = {
    "drop_sentences": _description_drop_sentences,
    "drop_words": _description_drop_words,
}


@dataclass
class _OpContext:
    obj: StructuredObject
    schema: Schema | None
    mode: str


def _apply_pool(value, ops, intensity, rng, ctx, weights):
    if intensity <= 0.0 or not weights:
        return value, []
    op_name = _weighted_choice(weights, rng)
    if op_name is None:
        return value, []
    return ops[op_name](value, intensity, rng, ctx)


def register_noise_op(facet: str, name: str, fn: Callable, default_weight: float = 0.0) -> None:
    """Register a new operation so configs can weight it by name."""
    tables = {"title": TITLE_OPS, "feature_bullets": BULLET_OPS, "description": DESCRIPTION_OPS}
    if facet not in tables:
        raise ValueError(f"cannot register ops for facet {facet!r}")
    tables[facet][name] = fn
    DEFAULT_POOLS[facet].setdefault(name, default_weight)


def noise_title(title, intensity, rng, obj, schema=None, mode=GROUNDED, weights=None):
    """Apply one weighted title operation; intensity 0 is the identity."""
    ctx = _OpContext(obj, schema, mode)
    pool = dict(DEFAULT_POOLS["title"]) if weights is None else weights
    return _apply_pool(title, TITLE_OPS, intensity, rng, ctx, pool)


def noise_bullets(bullets, intensity, rng, obj, schema=None, mode=GROUNDED, weights=None):
    bullets = tuple(bullets)
    if not bullets:
        return bullets, []
    ctx = _OpContext(obj, schema, mode)
    pool = dict(DEFAULT_POOLS["feature_bullets"]) if weights is None else weights
    return _apply_pool(bullets, BULLET_OPS, intensity, rng, ctx, pool)


def noise_description(description, intensity, rng, obj, schema=None, mode=GROUNDED, weights=None):
    if not description:
        return description, []
    ctx = _OpContext(obj, schema, mode)
    pool = dict(DEFAULT_POOLS["description"]) if weights is None else weights
    return _apply_pool(description, DESCRIPTION_OPS, intensity, rng, ctx, pool)


def noise_attributes(
    attributes,
    schema,
    intensity,
    rng,
    obj,
    mode=GROUNDED,
    weights=None,
    pinned=frozenset(),
):
    """Per-attribute noise: each attribute is hit with probability = intensity.

    Grounded mode restricts drop/corrupt to attributes whose true value is
    evidenced in the free-form facets of `obj`; denormalization is always
    allowed because the alias table itself recovers it. `pinned` names are
    exempt (they carry recovery evidence for an earlier facet operation).
    """
    weights = dict(DEFAULT_POOLS["attributes"]) if weights is None else dict(weights)
    attributes = dict(attributes)
    entries: list[LedgerEntry] = []
    if intensity <= 0.0 or not weights:
        return attributes, entries

    for name in _attribute_order(attributes, schema):
        if name in pinned:
            continue
        if float(rng.random()) >= intensity:
            continue
        value = attributes[name]
        spec = schema.spec(name) if schema is not None else None
        forms = spec.surface_forms(value) if spec is not None else (value,)
        aliases = [f for f in forms[1:] if f != value]
        eligible: dict[str, float] = {}
        if weights.get("denormalize_value", 0) > 0 and aliases:
            eligible["denormalize_value"] = weights["denormalize_value"]
        droppable = mode == CREATIVE or bool(
            value and find_evidence(value, forms[1:], obj, "attributes", schema)
        )
        if droppable:
            if weights.get("drop_attribute", 0) > 0:
                eligible["drop_attribute"] = weights["drop_attribute"]
            if (
                weights.get("corrupt_value", 0) > 0
                and spec is not None
                and spec.value_kind == "enumeration"
                and value in spec.allowed_values
                and len(spec.allowed_values) > 1
            ):
                eligible["corrupt_value"] = weights["corrupt_value"]
        op_name = _weighted_choice(eligible, rng)
        if op_name is None:
            continue
        if op_name == "drop_attribute":
            del attributes[name]
            payload = {"name": name, "original": value}
            entries.append(LedgerEntry("attributes", "drop_attribute", intensity, payload, controlled=True))
        elif op_name == "corrupt_value":
            others = [v for v in spec.allowed_values if v != value]
            replacement = others[int(rng.integers(len(others)))]
            attributes[name] = replacement
            payload = {"name": name, "original": value, "replacement": replacement}
            entries.append(LedgerEntry("attributes", "corrupt_value", intensity, payload, controlled=True))
        else:
            alias = aliases[int(rng.integers(len(aliases)))]
            attributes[name] = alias
            payload = {"name": name, "original": value, "replacement": alias}
            entries.append(LedgerEntry("attributes", "denormalize_value", intensity, payload))

    if weights.get("add_spurious_attribute", 0) > 0 and float(rng.random()) < intensity:
        absent = [
            s for s in (schema.attribute_specs if schema is not None else ())
            if s.name not in attributes and (s.allowed_values or s.normalization_aliases)
        ]
        if absent:
            spec = absent[int(rng.integers(len(absent)))]
            pool = spec.allowed_values or tuple(spec.normalization_aliases)
            added = pool[int(rng.integers(len(pool)))]
            attributes[spec.name] = added
            payload = {"name": spec.name, "added_value": added}
            entries.append(LedgerEntry("attributes", "add_spurious_attribute", intensity, payload))

    return attributes, entries


def soup_of_words(obj: StructuredObject, rng: np.random.Generator, schema: Schema | None = None) -> str:
    """Destroy all structure: facet texts and "name value" pairs become one
    uniformly shuffled token stream with no structural characters."""
    parts = [obj.title, *obj.feature_bullets, obj.description]
    parts += [
        f"{name} {obj.attributes[name]}"
        for name in _attribute_order(obj.attributes, schema)
    ]
    tokens = " ".join(parts).translate(_SOUP_TABLE).split()
    if not tokens:
        return ""
    order = rng.permutation(len(tokens))
    return " ".join(tokens[int(i)] for i in order)


def evidence_needles(schema: Schema | None, name: str, value: str) -> tuple[str, tuple[str, ...]]:
    forms = _surface_forms(schema, name, value)
    return forms[0], forms[1:]


def _refresh_evidence(entries: list[LedgerEntry], obj: StructuredObject, schema: Schema | None, mode: str) -> None:
    for entry in entries:
        if not entry.controlled:
            continue
        value, aliases = evidence_needles(schema, entry.payload["name"], entry.payload["original"])
        entry.evidence = find_evidence(value, aliases, obj, entry.facet, schema)
        if mode == GROUNDED and not entry.evidence:
            raise RuntimeError(
                f"grounded corruption lost its evidence: {entry.op} on {entry.payload['name']!r}"
            )


def corrupt(
    obj: StructuredObject,
    schema: Schema,
    config: NoiseConfig,
    rec_seed: int,
) -> tuple[str, CorruptionLedger]:
    """One full corruption pass over all four facets, then optional soup.

    Deterministic in (obj, schema, config, rec_seed); rec_seed comes from
    record_seed(config.seed, record_index).
    """
    low, high = config.intensity_range
    entries: list[LedgerEntry] = []
    current = obj

    # Free-form facets first, attributes last: grounded eligibility is then
    # judged against the final corrupted text, keeping evidence valid.
    for facet, noiser in (
        ("feature_bullets", noise_bullets),
        ("description", noise_description),
        ("title", noise_title),
    ):
        rng = spawn(rec_seed, facet)
        intensity = float(rng.uniform(low, high))
        value = getattr(current, facet)
        new_value, facet_entries = noiser(
            value, intensity, rng, current,
            schema=schema, mode=config.mode, weights=config.pool(facet),
        )
        current = current.replace(**{facet: new_value})
        entries.extend(facet_entries)

    # Attributes named in a title swap's evidence must survive this pass.
    pinned = set()
    for entry in entries:
        if entry.facet == "title" and entry.controlled:
            value, aliases = evidence_needles(schema, entry.payload["name"], entry.payload["original"])
            for ev in find_evidence(value, aliases, current, "title", schema):
                if _top_facet(ev.facet) == "attributes":
                    pinned.add(ev.facet[len("attributes["):-1])

    rng = spawn(rec_seed, "attributes")
    intensity = float(rng.uniform(low, high))
    new_attrs, attr_entries = noise_attributes(
        current.attributes, schema, intensity, rng, current,
        mode=config.mode, weights=config.pool("attributes"), pinned=frozenset(pinned),
    )
    current = current.replace(attributes=new_attrs)
    entries.extend(attr_entries)

    _refresh_evidence(entries, current, schema, config.mode)

    ledger = CorruptionLedger(entries=entries, soup_applied=False)
    soup_rng = spawn(rec_seed, "soup")
    if float(soup_rng.random()) < config.soup_probability:
        ledger.soup_applied = True
        input_text = soup_of_words(current, soup_rng, schema)
    else:
        input_text = serialize(current, schema)
    return input_text, ledger
