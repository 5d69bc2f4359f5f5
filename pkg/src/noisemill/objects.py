"""Catalog object model: records, per-category schemas, canonical JSON.

A record carries four facets (title, feature bullets, description,
tabular attributes) plus its category tag. Serialization is canonical:
fixed key order, attributes in schema order with unknown names last in
lexicographic order, so equal objects always produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

VALUE_KINDS = ("free-text", "enumeration", "numeric-with-unit")

MISSING_REQUIRED = "missing_required"
VALUE_NOT_IN_ENUMERATION = "value_not_in_enumeration"
UNKNOWN_ATTRIBUTE = "unknown_attribute"


class MalformedObject(ValueError):
    """Input line is not a well-formed serialized record."""


class CategoryMismatch(ValueError):
    """Object and schema categories differ."""


class SchemaFileInvalid(ValueError):
    """Schema document does not follow the schema-file format."""


@dataclass(frozen=True)
class Violation:
    kind: str
    name: str
    value: str | None = None


@dataclass(frozen=True)
class StructuredObject:
    category: str
    title: str = ""
    feature_bullets: tuple[str, ...] = ()
    description: str = ""
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("category must be non-empty")
        object.__setattr__(self, "feature_bullets", tuple(self.feature_bullets))
        object.__setattr__(self, "attributes", dict(self.attributes))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StructuredObject):
            return NotImplemented
        return (
            self.category == other.category
            and self.title == other.title
            and self.feature_bullets == other.feature_bullets
            and self.description == other.description
            and dict(self.attributes) == dict(other.attributes)
        )

    def replace(self, **changes) -> "StructuredObject":
        data = {
            "category": self.category,
            "title": self.title,
            "feature_bullets": self.feature_bullets,
            "description": self.description,
            "attributes": dict(self.attributes),
        }
        data.update(changes)
        return StructuredObject(**data)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    value_kind: str = "free-text"
    allowed_values: tuple[str, ...] = ()
    required: bool = False
    normalization_aliases: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.value_kind not in VALUE_KINDS:
            raise ValueError(f"unknown value_kind {self.value_kind!r}")
        values = tuple(self.allowed_values)
        if self.value_kind == "enumeration":
            if not values:
                raise ValueError(f"enumeration attribute {self.name!r} needs allowed_values")
            if len(set(values)) != len(values):
                raise ValueError(f"duplicate allowed_values on {self.name!r}")
        elif values:
            raise ValueError(f"allowed_values only apply to enumerations ({self.name!r})")
        aliases = {k: tuple(v) for k, v in dict(self.normalization_aliases).items()}
        if self.value_kind == "enumeration":
            stray = [k for k in aliases if k not in values]
            if stray:
                raise ValueError(
                    f"alias canonicals {stray} not in allowed_values of {self.name!r}"
                )
        object.__setattr__(self, "allowed_values", values)
        object.__setattr__(self, "normalization_aliases", aliases)

    def surface_forms(self, value: str) -> tuple[str, ...]:
        """The value itself plus every registered alias variant."""
        return (value, *self.normalization_aliases.get(value, ()))

    def canonical_candidates(self) -> tuple[str, ...]:
        """Values this attribute could canonically take, for recovery scans."""
        seen: dict[str, None] = {}
        for v in self.allowed_values:
            seen.setdefault(v)
        for v in self.normalization_aliases:
            seen.setdefault(v)
        return tuple(seen)


@dataclass(frozen=True)
class Schema:
    category: str
    attribute_specs: tuple[AttributeSpec, ...] = ()

    def __post_init__(self) -> None:
        specs = tuple(self.attribute_specs)
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute names in schema {self.category!r}")
        if not any(s.required for s in specs):
            raise ValueError(f"schema {self.category!r} must mark at least one attribute required")
        object.__setattr__(self, "attribute_specs", specs)

    def spec(self, name: str) -> AttributeSpec | None:
        for s in self.attribute_specs:
            if s.name == name:
                return s
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.attribute_specs)

    @property
    def required_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.attribute_specs if s.required)


def _attribute_order(attributes: Mapping[str, str], schema: Schema | None) -> list[str]:
    known = list(schema.names) if schema is not None else []
    ordered = [n for n in known if n in attributes]
    ordered += sorted(n for n in attributes if n not in known)
    return ordered


def serialize(obj: StructuredObject, schema: Schema | None = None) -> str:
    """Canonical single-line JSON for a record.

    Attribute order follows the schema when one is given; names absent
    from it (or all names, when schema is None) sort lexicographically.
    """
    payload = {
        "category": obj.category,
        "title": obj.title,
        "feature_bullets": list(obj.feature_bullets),
        "description": obj.description,
        "attributes": {n: obj.attributes[n] for n in _attribute_order(obj.attributes, schema)},
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def parse(text: str) -> StructuredObject:
    """Parse one serialized record; missing facets default to empty."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedObject(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedObject("top level must be a JSON object")
    category = raw.get("category")
    if not isinstance(category, str) or not category:
        raise MalformedObject("category must be a non-empty string")
    title = raw.get("title", "")
    if not isinstance(title, str):
        raise MalformedObject("title must be a string")
    bullets = raw.get("feature_bullets", [])
    if not isinstance(bullets, list) or any(not isinstance(b, str) for b in bullets):
        raise MalformedObject("feature_bullets must be a list of strings")
    description = raw.get("description", "")
    if not isinstance(description, str):
        raise MalformedObject("description must be a string")
    attributes = raw.get("attributes", {})
    if not isinstance(attributes, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in attributes.items()
    ):
        raise MalformedObject("attributes must map strings to strings")
    return StructuredObject(
        category=category,
        title=title,
        feature_bullets=tuple(bullets),
        description=description,
        attributes=attributes,
    )


def validate_against(obj: StructuredObject, schema: Schema) -> list[Violation]:
    """Schema conformance check; an empty list means conformant."""
    if obj.category != schema.category:
        raise CategoryMismatch(f"object is {obj.category!r}, schema is {schema.category!r}")
    violations: list[Violation] = []
    for spec in schema.attribute_specs:
        if spec.required and spec.name not in obj.attributes:
            violations.append(Violation(MISSING_REQUIRED, spec.name))
    for name, value in obj.attributes.items():
        spec = schema.spec(name)
        if spec is None:
            violations.append(Violation(UNKNOWN_ATTRIBUTE, name))
        elif spec.value_kind == "enumeration" and value not in spec.allowed_values:
            violations.append(Violation(VALUE_NOT_IN_ENUMERATION, name, value))
    return violations


def schemas_to_document(schemas: Iterable[Schema]) -> dict:
    return {
        schema.category: [
            {
                "name": s.name,
                "value_kind": s.value_kind,
                "allowed_values": list(s.allowed_values),
                "required": s.required,
                "normalization_aliases": {k: list(v) for k, v in s.normalization_aliases.items()},
            }
            for s in schema.attribute_specs
        ]
        for schema in schemas
    }


def schemas_from_document(doc: object) -> dict[str, Schema]:
    """Load a category -> attribute spec list document."""
    if not isinstance(doc, dict):
        raise SchemaFileInvalid("schema document must map category to spec lists")
    out: dict[str, Schema] = {}
    for category, raw_specs in doc.items():
        if not isinstance(raw_specs, list):
            raise SchemaFileInvalid(f"specs for {category!r} must be a list")
        specs = []
        for raw in raw_specs:
            if not isinstance(raw, dict) or "name" not in raw:
                raise SchemaFileInvalid(f"bad attribute spec in {category!r}: {raw!r}")
            try:
                specs.append(
                    AttributeSpec(
                        name=raw["name"],
                        value_kind=raw.get("value_kind", "free-text"),
                        allowed_values=tuple(raw.get("allowed_values", ())),
                        required=bool(raw.get("required", False)),
                        normalization_aliases={
                            k: tuple(v)
                            for k, v in (raw.get("normalization_aliases") or {}).items()
                        },
                    )
                )
            except (TypeError, ValueError, AttributeError) as exc:
                raise SchemaFileInvalid(f"bad attribute spec in {category!r}: {exc}") from exc
        try:
            out[category] = Schema(category=category, attribute_specs=tuple(specs))
        except ValueError as exc:
            raise SchemaFileInvalid(str(exc)) from exc
    return out


def load_schemas(path: str) -> dict[str, Schema]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaFileInvalid(f"schema file is not valid JSON: {exc}") from exc
    return schemas_from_document(doc)


def dump_schemas(schemas: Iterable[Schema], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schemas_to_document(schemas), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
