"""Bundled demo assets: schemas, constraints, and a ready-to-run config.

The demo schema has eight credit-flavored features (two immutable, two
discrete, one categorical) and six relation constraints covering every
grammar production. The equality-gap assets hold a minimal dataset with one
binding equality, used to demonstrate the cost of missing domain knowledge.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from tabattack.constraints.parser import parse_constraints
from tabattack.constraints.sets import ConstraintSet
from tabattack.data.schema import Schema, schema_from_dict

import json


# Planted label-rule weights used by the bundled demo config, aligned with the
# demo schema's feature order. The positive (attacked) class scores high on
# debt load and low on income/stability. A sizable share of the signal sits on
# the two immutable features, so adversarially trained models retain a
# defensible core while standard models stay attackable near the boundary.
DEMO_LABEL_WEIGHTS = (0.5, -0.35, -0.7, 0.65, 0.3, -1.3, -0.9, 0.35)
DEMO_NOISE_STD = 0.25
DEMO_TRAIN_EPOCHS = 60
DEMO_WEIGHT_DECAY = 1e-3
DEMO_ADV_EPSILON = 0.2
DEMO_ADV_STEPS = 5


def asset_path(name: str) -> Path:
    return Path(str(resources.files("tabattack") / "assets" / name))


def demo_config_path() -> Path:
    return asset_path("demo_config.json")


def _load(schema_name: str, constraints_name: str) -> tuple[Schema, ConstraintSet]:
    schema = schema_from_dict(json.loads(asset_path(schema_name).read_text(encoding="utf-8")))
    text = asset_path(constraints_name).read_text(encoding="utf-8")
    return schema, parse_constraints(text, schema)


def load_demo() -> tuple[Schema, ConstraintSet]:
    return _load("demo_schema.json", "demo_constraints.txt")


def load_equality_gap() -> tuple[Schema, ConstraintSet]:
    return _load("equality_gap_schema.json", "equality_gap_constraints.txt")
