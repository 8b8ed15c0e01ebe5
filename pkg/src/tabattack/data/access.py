"""Attacker dataset-access sampling: full set, stratified subset, distribution."""

from __future__ import annotations

import hashlib

import numpy as np

from tabattack.data.dataset import Dataset
from tabattack.exceptions import DataError

FULL = "full"
SUBSET = "subset"
DISTRIBUTION = "distribution"
ACCESS_LEVELS = (FULL, SUBSET, DISTRIBUTION)

DEFAULT_SUBSET_FRACTION = 0.10


def _derived_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sample_access(
    train: Dataset,
    level: str,
    seed: int,
    fraction: float = DEFAULT_SUBSET_FRACTION,
) -> Dataset:
    """Materialize the dataset an attacker at the given access level can see."""
    if level == FULL:
        return train
    if level == SUBSET:
        if not 0.0 < fraction <= 1.0:
            raise DataError("subset fraction must lie in (0, 1]")
        rng = np.random.default_rng(_derived_seed(seed, "subset"))
        keep: list[np.ndarray] = []
        for cls in (0, 1):
            idx = np.flatnonzero(train.y == cls)
            take = max(1, round(fraction * idx.size)) if idx.size else 0
            if take:
                keep.append(rng.choice(idx, size=take, replace=False))
        chosen = np.sort(np.concatenate(keep))
        return Dataset(
            X=train.X[chosen].copy(),
            y=train.y[chosen].copy(),
            schema=train.schema,
            constraint_set=train.constraint_set,
        )
    if level == DISTRIBUTION:
        if train.generator is not None:
            from tabattack.data.synthetic import generate_synthetic

            base = train.generator_seed if train.generator_seed is not None else 0
            draw = generate_synthetic(train.generator, _derived_seed(base ^ seed, "distribution"))
            train_rows = {row.tobytes() for row in train.X}
            overlap = [i for i, row in enumerate(draw.X) if row.tobytes() in train_rows]
            if overlap:
                keep = np.array([i for i in range(draw.n) if i not in set(overlap)])
                draw = Dataset(
                    X=draw.X[keep],
                    y=draw.y[keep],
                    schema=draw.schema,
                    constraint_set=draw.constraint_set,
                    generator=draw.generator,
                    generator_seed=draw.generator_seed,
                )
            return draw
        if train.reserved is not None:
            return train.reserved
        raise DataError(
            "distribution-level access needs a synthetic generator or a reserved disjoint split"
        )
    raise DataError(f"unknown dataset access level {level!r}")
