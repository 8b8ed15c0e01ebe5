"""Dataset container and RFC-4180 CSV ingestion/serialization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from tabattack.constraints.sets import ConstraintSet, check_batch
from tabattack.data.schema import CATEGORICAL, DISCRETE, Schema, load_schema
from tabattack.exceptions import DataError

if TYPE_CHECKING:
    from tabattack.data.synthetic import GeneratorConfig


@dataclass
class Dataset:
    """Immutable-by-convention matrix of rows in original units plus labels."""

    X: np.ndarray
    y: np.ndarray
    schema: Schema
    constraint_set: ConstraintSet | None = None
    generator: "GeneratorConfig | None" = field(default=None, repr=False)
    generator_seed: int | None = None
    reserved: "Dataset | None" = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.d:
            raise DataError(
                f"data matrix has shape {self.X.shape}, schema expects {self.schema.d} features"
            )
        if self.y.shape != (self.X.shape[0],):
            raise DataError("labels must align one-to-one with rows")
        if not np.all(np.isin(self.y, (0, 1))):
            raise DataError("labels must be binary 0/1")

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _validate_rows(X: np.ndarray, schema: Schema, cset: ConstraintSet | None) -> None:
    issues: list[str] = []
    for i, f in enumerate(schema.features):
        col = X[:, i]
        bad = np.flatnonzero((col < f.lower) | (col > f.upper))
        for r in bad[:5]:
            issues.append(f"row {r + 1}, column {f.name!r}: value {col[r]} outside bounds")
        if f.ftype == DISCRETE:
            bad = np.flatnonzero(col != np.round(col))
            for r in bad[:5]:
                issues.append(f"row {r + 1}, column {f.name!r}: value {col[r]} is not integral")
        elif f.ftype == CATEGORICAL:
            assert f.levels is not None
            gaps = np.abs(col[:, None] - np.asarray(f.levels)[None, :]).min(axis=1)
            bad = np.flatnonzero(gaps > 0)
            for r in bad[:5]:
                issues.append(f"row {r + 1}, column {f.name!r}: value {col[r]} is not an allowed level")
    if cset is not None and cset.has_relations and X.shape[0] > 0:
        ok = check_batch(X, cset, schema)
        for r in np.flatnonzero(~ok)[:5]:
            issues.append(f"row {r + 1}: relation constraints violated")
    if issues:
        raise DataError("dataset validation failed:\n  " + "\n  ".join(issues))


def load_dataset(
    csv_path: str | Path,
    schema_path: str | Path | None = None,
    schema: Schema | None = None,
    constraint_set: ConstraintSet | None = None,
) -> Dataset:
    """Load a CSV whose header matches the schema's feature names plus target."""
    if schema is None:
        if schema_path is None:
            raise DataError("either schema or schema_path is required")
        schema = load_schema(schema_path)
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise DataError(f"dataset file not found: {csv_path}")
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{csv_path}: empty file") from None
        missing = [n for n in (*schema.names, schema.target_name) if n not in header]
        if missing:
            raise DataError(f"{csv_path}: missing column(s) {', '.join(repr(m) for m in missing)}")
        col_of = {name: header.index(name) for name in header}
        rows: list[list[float]] = []
        labels: list[int] = []
        for r, record in enumerate(reader, start=1):
            try:
                rows.append([float(record[col_of[n]]) for n in schema.names])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{csv_path}: row {r}: unparseable cell ({exc})") from None
            raw_label = record[col_of[schema.target_name]]
            try:
                label = float(raw_label)
            except ValueError:
                raise DataError(f"{csv_path}: row {r}: label {raw_label!r} is not a number") from None
            if label not in (0.0, 1.0):
                raise DataError(f"{csv_path}: row {r}: label must be 0 or 1, got {raw_label!r}")
            labels.append(int(label))
    X = np.array(rows, dtype=float).reshape(len(rows), schema.d)
    _validate_rows(X, schema, constraint_set)
    return Dataset(X=X, y=np.array(labels, dtype=int), schema=schema, constraint_set=constraint_set)


def _format_cell(value: float) -> str:
    # repr of a Python float round-trips float64 exactly, so save/load is
    # byte-stable.
    value = float(value)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def dataset_to_csv_text(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*ds.schema.names, ds.schema.target_name])
    for row, label in zip(ds.X, ds.y):
        writer.writerow([*(_format_cell(v) for v in row), int(label)])
    return buf.getvalue()


def save_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv_text(ds), encoding="utf-8")
