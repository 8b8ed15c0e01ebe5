"""Min-max mapping between original feature units and the unit attack cube.

Feature bounds double as scaling parameters, so scaled space is [0, 1]^d and
the L2 perturbation budget is unit-free. Constant features (lower == upper)
map to 0 and unscale back to their single value.
"""

from __future__ import annotations

import numpy as np

from tabattack.data.schema import Schema


class Scaler:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.lowers = schema.lowers.copy()
        self.uppers = schema.uppers.copy()
        self.ranges = self.uppers - self.lowers

    def scale(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.ranges == 0.0, 1.0, self.ranges)
        out = (X - self.lowers) / safe
        if np.any(self.ranges == 0.0):
            out = np.where(self.ranges == 0.0, 0.0, out)
        return out

    def unscale(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.lowers + X * self.ranges
