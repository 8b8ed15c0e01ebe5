"""Deterministic repair of type violations and assignment-form equalities.

Discrete and categorical features are rounded in the inverse direction of
the perturbation (toward the original value), which also keeps them inside
their bounds. Equalities of the shape ``F[f] = rhs`` where ``rhs`` does not
read ``f`` are then enforced by writing ``rhs``'s value into ``f``, in
topological order of the assignment dependency graph. Inequalities and
multi-feature equalities are not repaired.
"""

from __future__ import annotations

import numpy as np

from tabattack.constraints.penalty import numeric_value_batch
from tabattack.constraints.sets import ConstraintSet
from tabattack.data.schema import CATEGORICAL, DISCRETE, Schema

# Values this close to a representable grid point are treated as exactly on
# it, so scale/unscale float noise never flips a rounding direction.
_SNAP_TOL = 1e-9


def _round_toward(value: float, origin: float) -> float:
    nearest = float(np.round(value))
    if abs(value - nearest) <= _SNAP_TOL:
        return nearest
    if value > origin:
        return float(np.floor(value))
    if value < origin:
        return float(np.ceil(value))
    return value


def _snap_toward(value: float, origin: float, levels: np.ndarray) -> float:
    gaps = np.abs(levels - value)
    nearest = float(levels[int(np.argmin(gaps))])
    if abs(nearest - value) <= _SNAP_TOL:
        return nearest
    if value > origin:
        side = levels[levels <= value]
    elif value < origin:
        side = levels[levels >= value]
    else:
        side = levels
    if side.size == 0:
        return nearest
    return float(side[int(np.argmin(np.abs(side - value)))])


def repair(
    x0: np.ndarray,
    x_adv: np.ndarray,
    cset: ConstraintSet,
    schema: Schema | None = None,
    include_relations: bool = True,
) -> np.ndarray:
    """Repair a candidate (original units) toward domain validity.

    Idempotent: repairing a repaired vector returns it unchanged. With
    ``include_relations=False`` only the type pass runs, matching an attacker
    without relation-constraint knowledge.
    """
    schema = schema if schema is not None else cset.schema
    x0 = np.asarray(x0, dtype=float)
    out = np.array(x_adv, dtype=float)
    for i, f in enumerate(schema.features):
        if f.ftype == DISCRETE:
            out[i] = _round_toward(out[i], x0[i])
        elif f.ftype == CATEGORICAL:
            assert f.levels is not None
            out[i] = _snap_toward(out[i], x0[i], np.asarray(f.levels, dtype=float))
    if include_relations:
        for a in cset.assignments:
            out[a.target] = float(numeric_value_batch(a.rhs, out, x0)[0])
    return out
