"""Feature specifications and tabular schemas.

A feature is described by its type (continuous, discrete, or categorical
with an explicit level set), its mutability from the attacker's point of
view, and its lower/upper bounds. Bounds double as the min-max scaling
parameters used to map data into the unit attack cube.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from tabattack.exceptions import DataError

CONTINUOUS = "continuous"
DISCRETE = "discrete"
CATEGORICAL = "categorical"
FEATURE_TYPES = (CONTINUOUS, DISCRETE, CATEGORICAL)


@dataclass(frozen=True)
class FeatureSpec:
    """Type, mutability, and bounds of one feature."""

    name: str
    ftype: str
    mutable: bool
    lower: float
    upper: float
    levels: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.ftype not in FEATURE_TYPES:
            raise DataError(f"feature {self.name!r}: unknown type {self.ftype!r}")
        if not self.lower <= self.upper:
            raise DataError(f"feature {self.name!r}: lower bound exceeds upper bound")
        if self.ftype == DISCRETE:
            if self.lower != int(self.lower) or self.upper != int(self.upper):
                raise DataError(f"feature {self.name!r}: discrete bounds must be integral")
        if self.ftype == CATEGORICAL:
            if not self.levels:
                raise DataError(f"feature {self.name!r}: categorical feature needs levels")
            for lv in self.levels:
                if not self.lower <= lv <= self.upper:
                    raise DataError(
                        f"feature {self.name!r}: level {lv} outside [{self.lower}, {self.upper}]"
                    )
        elif self.levels is not None:
            raise DataError(f"feature {self.name!r}: levels only allowed for categorical type")


@dataclass(frozen=True)
class Schema:
    """Ordered feature list plus the target column name."""

    features: tuple[FeatureSpec, ...]
    target_name: str
    constraints_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.target_name in names:
            raise DataError("target column name collides with a feature name")
        if not any(f.mutable for f in self.features):
            raise DataError("schema needs at least one mutable feature")

    @property
    def d(self) -> int:
        return len(self.features)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @cached_property
    def index_of(self) -> dict[str, int]:
        return {f.name: i for i, f in enumerate(self.features)}

    @cached_property
    def mutable_mask(self) -> np.ndarray:
        return np.array([f.mutable for f in self.features], dtype=bool)

    @cached_property
    def lowers(self) -> np.ndarray:
        return np.array([f.lower for f in self.features], dtype=float)

    @cached_property
    def uppers(self) -> np.ndarray:
        return np.array([f.upper for f in self.features], dtype=float)

    @cached_property
    def mutable_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mutable_mask)


def schema_from_dict(obj: dict) -> Schema:
    try:
        raw_features = obj["features"]
        target = obj["target"]
    except KeyError as exc:
        raise DataError(f"schema is missing required key {exc.args[0]!r}") from None
    features = []
    for raw in raw_features:
        try:
            features.append(
                FeatureSpec(
                    name=raw["name"],
                    ftype=raw["type"],
                    mutable=bool(raw["mutable"]),
                    lower=float(raw["lower"]),
                    upper=float(raw["upper"]),
                    levels=tuple(float(v) for v in raw["levels"]) if "levels" in raw else None,
                )
            )
        except KeyError as exc:
            raise DataError(
                f"feature entry {raw.get('name', '?')!r} is missing key {exc.args[0]!r}"
            ) from None
    return Schema(
        features=tuple(features),
        target_name=target,
        constraints_path=obj.get("constraints"),
    )


def schema_to_dict(schema: Schema) -> dict:
    features = []
    for f in schema.features:
        entry: dict = {
            "name": f.name,
            "type": f.ftype,
            "mutable": f.mutable,
            "lower": f.lower,
            "upper": f.upper,
        }
        if f.levels is not None:
            entry["levels"] = list(f.levels)
        features.append(entry)
    obj: dict = {"features": features, "target": schema.target_name}
    if schema.constraints_path is not None:
        obj["constraints"] = schema.constraints_path
    return obj


def load_schema(path: str | Path) -> Schema:
    path = Path(path)
    if not path.exists():
        raise DataError(f"schema file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"schema file {path} is not valid JSON: {exc}") from None
    return schema_from_dict(obj)


def save_schema(schema: Schema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_dict(schema), fh, indent=2, sort_keys=True)
        fh.write("\n")
