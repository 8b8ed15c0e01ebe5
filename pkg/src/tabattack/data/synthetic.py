"""Synthetic constrained datasets with a planted noisy linear label rule.

Rows are drawn uniformly inside the feature bounds (integers for discrete
features, level draws for categorical ones), assignment-form equalities are
computed from their defining expressions, and rows violating any other
constraint are rejected and redrawn. Labels come from a fixed linear scorer
in scaled space plus Gaussian noise, thresholded at the exact class-balance
quantile, so learnability is high and the class split is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabattack.constraints.penalty import numeric_value_batch
from tabattack.constraints.sets import ConstraintSet, check_batch
from tabattack.data.dataset import Dataset
from tabattack.data.schema import CATEGORICAL, DISCRETE, Schema
from tabattack.data.scaling import Scaler
from tabattack.exceptions import DataError

_MAX_REJECTION_ROUNDS = 200


@dataclass(frozen=True)
class GeneratorConfig:
    schema: Schema
    constraint_set: ConstraintSet | None = None
    n_rows: int = 500
    positive_fraction: float = 0.5
    noise_std: float = 0.1
    label_seed: int = 0
    label_weights: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.n_rows < 2:
            raise DataError("generator needs at least two rows")
        if not 0.0 < self.positive_fraction < 1.0:
            raise DataError("positive_fraction must lie strictly between 0 and 1")
        if self.label_weights is not None and len(self.label_weights) != self.schema.d:
            raise DataError("label_weights length must equal the feature count")


def _planted_weights(cfg: GeneratorConfig) -> np.ndarray:
    if cfg.label_weights is not None:
        return np.asarray(cfg.label_weights, dtype=float)
    rng = np.random.default_rng(cfg.label_seed)
    return rng.normal(0.0, 1.0, size=cfg.schema.d)


def _draw_rows(schema: Schema, rng: np.random.Generator, n: int,
               assigned: frozenset[int]) -> np.ndarray:
    X = np.empty((n, schema.d))
    for i, f in enumerate(schema.features):
        if i in assigned:
            X[:, i] = 0.0
        elif f.ftype == DISCRETE:
            X[:, i] = rng.integers(int(f.lower), int(f.upper) + 1, size=n).astype(float)
        elif f.ftype == CATEGORICAL:
            assert f.levels is not None
            X[:, i] = rng.choice(np.asarray(f.levels, dtype=float), size=n)
        else:
            X[:, i] = rng.uniform(f.lower, f.upper, size=n)
    return X


def generate_synthetic(cfg: GeneratorConfig, seed: int) -> Dataset:
    """Draw a dataset that satisfies the attached constraint set by construction."""
    schema = cfg.schema
    rng = np.random.default_rng(seed)
    cset = cfg.constraint_set
    assigned = frozenset(a.target for a in cset.assignments) if cset is not None else frozenset()

    accepted: list[np.ndarray] = []
    need = cfg.n_rows
    for _ in range(_MAX_REJECTION_ROUNDS):
        batch = _draw_rows(schema, rng, max(4 * need, 32), assigned)
        if cset is not None:
            for a in cset.assignments:
                batch[:, a.target] = numeric_value_batch(a.rhs, batch, batch)
            ok = check_batch(batch, cset, schema)
            batch = batch[ok]
        else:
            lowers, uppers = schema.lowers, schema.uppers
            ok = np.all((batch >= lowers) & (batch <= uppers), axis=1)
            batch = batch[ok]
        if batch.shape[0]:
            accepted.append(batch)
            need -= batch.shape[0]
        if need <= 0:
            break
    else:
        raise DataError(
            "synthetic generation exceeded the rejection budget; constraints may be "
            "unsatisfiable under uniform draws"
        )
    X = np.concatenate(accepted)[: cfg.n_rows]

    weights = _planted_weights(cfg)
    scores = (Scaler(schema).scale(X) - 0.5) @ weights
    scores = scores + rng.normal(0.0, cfg.noise_std, size=cfg.n_rows)
    n_pos = round(cfg.n_rows * cfg.positive_fraction)
    order = np.argsort(scores, kind="mergesort")
    y = np.zeros(cfg.n_rows, dtype=int)
    y[order[cfg.n_rows - n_pos:]] = 1

    return Dataset(
        X=X,
        y=y,
        schema=schema,
        constraint_set=cset,
        generator=cfg,
        generator_seed=seed,
    )
