from __future__ import annotations

import pytest

from noisemill.objects import AttributeSpec, Schema, StructuredObject


@pytest.fixture
def shirt_schema() -> Schema:
    return Schema(
        category="shirt",
        attribute_specs=(
            AttributeSpec(
                name="color",
                value_kind="enumeration",
                allowed_values=("red", "blue", "green"),
                required=True,
                normalization_aliases={"red": ("crimson",), "blue": ("azure",)},
            ),
            AttributeSpec(
                name="material",
                value_kind="enumeration",
                allowed_values=("cotton", "wool", "linen"),
                required=True,
                normalization_aliases={"wool": ("merino",)},
            ),
            AttributeSpec(
                name="weight",
                value_kind="numeric-with-unit",
                normalization_aliases={"2 lb": ("32 oz",), "1 lb": ("16 oz",)},
            ),
            AttributeSpec(
                name="brand",
                value_kind="free-text",
                normalization_aliases={"northpeak": (), "fernvale": ()},
            ),
        ),
    )


@pytest.fixture
def shirt(shirt_schema) -> StructuredObject:
    return StructuredObject(
        category="shirt",
        title="Red Cotton Crew Shirt",
        feature_bullets=(
            "Made with cotton that wears in nicely",
            "Comes in a deep red tone",
            "Weighs about 2 lb",
            "Built by northpeak with care",
        ),
        description="The red colorway stays true over time. Each one is cut from cotton stock. Care stays easy with a quick wipe down.",
        attributes={"color": "red", "material": "cotton", "weight": "2 lb", "brand": "northpeak"},
    )
