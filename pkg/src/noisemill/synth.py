"""Deterministic synthetic mini-catalog.

Generates per-category schemas and objects whose free-form facets embed
a subset of the attribute values (the facets are correlated on purpose),
so grounded-mode noising always finds recoverable targets. Value words
are kept disjoint from template filler words; recovery scans therefore
never hit accidental mentions.
"""

from __future__ import annotations

import numpy as np

from .objects import AttributeSpec, Schema, StructuredObject
from .rng import spawn

CATEGORY_NOUNS = (
    "shirt", "mug", "backpack", "lamp", "blanket", "kettle", "notebook",
    "sneaker", "headphone", "jacket", "wallet", "umbrella", "candle",
    "rug", "speaker", "teapot", "apron", "stool", "basket", "mirror",
)

# name -> canonical value -> alias surface forms
ENUM_POOLS: dict[str, dict[str, tuple[str, ...]]] = {
    "color": {
        "red": ("crimson", "scarlet"), "blue": ("azure", "cobalt"),
        "green": ("emerald",), "black": ("onyx",), "white": ("ivory",),
        "yellow": ("amber",), "purple": ("violet", "mauve"),
        "orange": ("tangerine",), "brown": ("umber",), "grey": ("slate",),
    },
    "material": {
        "cotton": (), "wool": ("merino",), "leather": ("cowhide",),
        "canvas": (), "ceramic": ("stoneware",), "bamboo": (),
        "linen": ("flax",), "steel": ("stainless",), "oak": (), "felt": (),
    },
    "pattern": {
        "striped": ("banded",), "dotted": ("spotted",), "plain": ("solid",),
        "floral": ("blossom",), "checked": ("plaid",),
        "geometric": ("angular",), "paisley": (), "herringbone": (),
    },
    "size": {
        "mini": ("tiny",), "small": ("sm",), "medium": ("md",),
        "large": ("lg",), "xlarge": ("xl",), "jumbo": ("xxl",),
    },
    "fit": {
        "slim": ("tapered",), "regular": ("standard",),
        "relaxed": ("roomy",), "boxy": (),
    },
    "style": {
        "classic": ("timeless",), "modern": ("contemporary",),
        "vintage": ("retro",), "sporty": ("athletic",),
        "rustic": ("farmhouse",),
    },
    "finish": {
        "matte": (), "glossy": ("lacquered",), "brushed": ("buffed",),
        "hammered": (), "polished": ("burnished",),
    },
    "closure": {
        "zipper": ("zip",), "buttoned": (), "velcro": ("hookloop",),
        "drawstring": ("cinch",), "magnetic": ("magnet",),
    },
    "season": {
        "summer": (), "winter": (), "autumn": ("fall",),
        "spring": (), "allseason": ("yearround",),
    },
    "room": {
        "kitchen": (), "bedroom": (), "office": ("study",),
        "outdoor": ("patio",), "bathroom": ("washroom",),
    },
}

NUMERIC_POOLS: dict[str, dict[str, tuple[str, ...]]] = {
    "weight": {
        "1 lb": ("16 oz",), "2 lb": ("32 oz",), "3 lb": ("48 oz",),
        "5 lb": ("80 oz",), "8 lb": ("128 oz",),
    },
    "length": {
        "10 cm": ("100 mm",), "25 cm": ("250 mm",),
        "40 cm": ("400 mm",), "60 cm": ("600 mm",),
    },
    "capacity": {
        "1 l": ("1000 ml",), "2 l": ("2000 ml",), "3 l": ("3000 ml",),
    },
    "width": {
        "5 inch": ("12.7 cm",), "8 inch": ("20.3 cm",), "12 inch": ("30.5 cm",),
    },
}

FREE_TEXT_POOLS: dict[str, tuple[str, ...]] = {
    "brand": (
        "northpeak", "lumenworks", "brightloom", "fernvale", "stonebrook",
        "hollowpine", "quartzline", "maplecore", "driftlane", "copperwick",
    ),
    "collection": (
        "aurora", "solstice", "meridian", "harbor", "atlas",
        "ember", "tundra", "lagoon",
    ),
}

# Slots available to the free-form templates below.
TITLE_TEMPLATES = (
    ("color", "material"),
    ("brand", "color"),
    ("style", "color"),
    ("material", "pattern"),
    ("color", "material", "style"),
    ("brand", "material"),
)

BULLET_TEMPLATES: dict[str, str] = {
    "material": "Made with {material} that wears in nicely",
    "color": "Comes in a deep {color} tone",
    "weight": "Weighs about {weight}",
    "fit": "Cut for a {fit} fit",
    "collection": "Pairs well with the {collection} collection",
    "closure": "Fastens with a {closure} closure",
    "length": "Measures {length} end to end",
    "capacity": "Holds up to {capacity}",
    "style": "A {style} profile for any setting",
    "finish": "Finished in {finish}",
    "season": "Best suited for {season} use",
    "size": "Sized {size} for most needs",
    "room": "At home in the {room}",
    "pattern": "Carries {pattern} detailing across the surface",
    "width": "Spans {width} across",
    "brand": "Built by {brand} with care",
}

BULLET_FILLERS = (
    "Backed by a two year guarantee",
    "Wipes clean with a damp cloth",
    "Ships flat in recycled packaging",
    "Designed to be repaired, not replaced",
)

SENTENCE_TEMPLATES: dict[str, str] = {
    "color": "The {color} colorway stays true over time.",
    "material": "Each one is cut from {material} stock.",
    "pattern": "A {pattern} motif runs across the body.",
    "fit": "The {fit} cut suits most frames.",
    "style": "Expect a {style} look that settles in anywhere.",
    "length": "It measures {length} from edge to edge.",
    "weight": "It weighs {weight} on the dot.",
    "brand": "Crafted by {brand} with obvious pride.",
    "collection": "It anchors the {collection} line this year.",
    "finish": "The {finish} surface resists fingerprints.",
    "closure": "A {closure} keeps everything secure.",
    "season": "Rated for {season} conditions.",
    "capacity": "It holds {capacity} comfortably.",
    "size": "Sized {size} out of the box.",
    "room": "It looks sharp in the {room}.",
    "width": "It spans {width} across the front.",
}

SENTENCE_FILLERS = (
    "Care stays easy with a quick wipe down.",
    "Thoughtful touches keep it dependable for years.",
    "It arrives ready to use, no fuss involved.",
    "Most owners keep one within reach all week.",
    "The craftsmanship speaks for itself.",
)


def _pick(rng: np.random.Generator, items) -> object:
    return items[int(rng.integers(len(items)))]


def _sample(rng: np.random.Generator, items, k: int) -> list:
    idx = rng.choice(len(items), size=min(k, len(items)), replace=False)
    return [items[int(i)] for i in sorted(int(j) for j in idx)]


def generate_schemas(n_categories: int, rng: np.random.Generator) -> list[Schema]:
    """Per-category schemas with 4-12 mixed-kind attributes, >=2 required.

    Every schema carries color and material (required) so the title
    templates always have slots to fill.
    """
    if n_categories < 1:
        raise ValueError("n_categories must be >= 1")
    schemas = []
    for i in range(n_categories):
        noun = CATEGORY_NOUNS[i % len(CATEGORY_NOUNS)]
        category = noun if i < len(CATEGORY_NOUNS) else f"{noun}{i // len(CATEGORY_NOUNS) + 1}"
        n_attrs = int(rng.integers(4, 13))
        extra_names = [n for n in (*ENUM_POOLS, *NUMERIC_POOLS, *FREE_TEXT_POOLS)
                       if n not in ("color", "material")]
        chosen = ["color", "material"] + _sample(rng, extra_names, n_attrs - 2)
        specs = []
        for name in chosen:
            required = name in ("color", "material") or float(rng.random()) < 0.3
            if name in ENUM_POOLS:
                pool = ENUM_POOLS[name]
                values = _sample(rng, list(pool), int(rng.integers(3, min(8, len(pool)) + 1)))
                specs.append(AttributeSpec(
                    name=name,
                    value_kind="enumeration",
                    allowed_values=tuple(values),
                    required=required,
                    normalization_aliases={v: pool[v] for v in values if pool[v]},
                ))
            elif name in NUMERIC_POOLS:
                specs.append(AttributeSpec(
                    name=name,
                    value_kind="numeric-with-unit",
                    required=required,
                    normalization_aliases=dict(NUMERIC_POOLS[name]),
                ))
            else:
                # Known canonical spellings, no variants: lets the recovery
                # oracle enumerate candidates for free-text values too.
                specs.append(AttributeSpec(
                    name=name,
                    value_kind="free-text",
                    required=required,
                    normalization_aliases={v: () for v in FREE_TEXT_POOLS[name]},
                ))
        schemas.append(Schema(category=category, attribute_specs=tuple(specs)))
    return schemas


def _sample_value(spec: AttributeSpec, rng: np.random.Generator) -> str:
    if spec.allowed_values:
        return str(_pick(rng, spec.allowed_values))
    return str(_pick(rng, list(spec.normalization_aliases)))


def _compose_title(noun: str, attrs: dict[str, str], rng: np.random.Generator, noisy: bool) -> str:
    if noisy:
        return f"{attrs['color'].title()} {noun.title()}"
    usable = [t for t in TITLE_TEMPLATES if all(slot in attrs for slot in t)]
    slots = _pick(rng, usable) if usable else ("color",)
    words = [attrs[s].title() for s in slots] + [noun.title()]
    return " ".join(words)


def _compose_bullets(attrs: dict[str, str], rng: np.random.Generator, noisy: bool) -> tuple[str, ...]:
    usable = [name for name in BULLET_TEMPLATES if name in attrs]
    count = int(rng.integers(2, 6)) if not noisy else int(rng.integers(1, 3))
    chosen = _sample(rng, usable, min(count, len(usable)))
    bullets = [BULLET_TEMPLATES[name].format(**{name: attrs[name]}) for name in chosen]
    while len(bullets) < count:
        bullets.append(str(_pick(rng, BULLET_FILLERS)))
    return tuple(bullets)


def _compose_description(attrs: dict[str, str], rng: np.random.Generator, noisy: bool) -> str:
    usable = [name for name in SENTENCE_TEMPLATES if name in attrs]
    if noisy:
        # the title only carries the color; keep a second evidenced value here
        chosen = ["material"]
    else:
        n_value = int(rng.integers(2, 5))
        chosen = _sample(rng, usable, min(n_value, len(usable)))
    sentences = [SENTENCE_TEMPLATES[name].format(**{name: attrs[name]}) for name in chosen]
    for _ in range(int(rng.integers(1, 3))):
        sentences.append(str(_pick(rng, SENTENCE_FILLERS)))
    return " ".join(sentences)


def generate_object(
    schema: Schema,
    rng: np.random.Generator,
    noisy: bool = False,
) -> StructuredObject:
    """One schema-conformant object with correlated facets.

    Noisy objects mimic an imperfect source: optional attributes go
    missing and the free-form facets shrink, but the object still
    validates cleanly.
    """
    attrs: dict[str, str] = {}
    for spec in schema.attribute_specs:
        if noisy and not spec.required and float(rng.random()) < 0.5:
            continue
        attrs[spec.name] = _sample_value(spec, rng)
    return StructuredObject(
        category=schema.category,
        title=_compose_title(schema.category, attrs, rng, noisy),
        feature_bullets=_compose_bullets(attrs, rng, noisy),
        description=_compose_description(attrs, rng, noisy),
        attributes=attrs,
    )


def generate_objects(
    schemas: list[Schema],
    count: int,
    seed: int = 0,
    noisy_fraction: float = 0.1,
) -> list[StructuredObject]:
    """Objects keyed by (seed, index); order-independent and reproducible."""
    if not 0.0 <= noisy_fraction <= 1.0:
        raise ValueError("noisy_fraction must be in [0, 1]")
    out = []
    for i in range(count):
        rng = spawn(seed, "object", i)
        schema = schemas[int(rng.integers(len(schemas)))]
        noisy = float(rng.random()) < noisy_fraction
        out.append(generate_object(schema, rng, noisy=noisy))
    return out


def all_surface_forms() -> set[str]:
    """Every value and alias the pools can emit (for disjointness checks)."""
    forms: set[str] = set()
    for pool in (*ENUM_POOLS.values(), *NUMERIC_POOLS.values()):
        for value, aliases in pool.items():
            forms.add(value)
            forms.update(aliases)
    for values in FREE_TEXT_POOLS.values():
        forms.update(values)
    return forms
