"""Access-controlled model wrapper with query and gradient-call accounting.

Attacks declare the capability they need; the wrapper enforces the scenario's
access level and meters usage. ``whitebox`` grants loss gradients and
probabilities, ``query_proba`` probabilities only, ``none`` nothing.
"""

from __future__ import annotations

import numpy as np

from tabattack.exceptions import AccessLevelError
from tabattack.model.mlp import MlpModel

WHITEBOX = "whitebox"
QUERY_PROBA = "query_proba"
NONE = "none"
_ORDER = {NONE: 0, QUERY_PROBA: 1, WHITEBOX: 2}


class ModelAccess:
    def __init__(self, model: MlpModel, level: str):
        if level not in _ORDER:
            raise AccessLevelError(f"unknown access level {level!r}")
        self.model = model
        self.level = level
        self.queries = 0
        self.gradient_calls = 0

    def allows(self, required: str) -> bool:
        return _ORDER[self.level] >= _ORDER[required]

    def _require(self, required: str, what: str) -> None:
        if not self.allows(required):
            raise AccessLevelError(f"{what} requires {required} access, have {self.level}")

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class probabilities; every row costs one query."""
        self._require(QUERY_PROBA, "probability query")
        X = np.asarray(X, dtype=float)
        self.queries += 1 if X.ndim == 1 else X.shape[0]
        return self.model.forward_batch(X)

    def loss_gradient(self, x: np.ndarray, y: int) -> tuple[float, np.ndarray]:
        """Cross-entropy loss and its input gradient; costs one gradient call."""
        self._require(WHITEBOX, "loss gradient")
        self.gradient_calls += 1
        return self.model.loss_and_input_gradient(x, y)

    def counters(self) -> tuple[int, int]:
        return self.queries, self.gradient_calls

    def reset_counters(self) -> None:
        self.queries = 0
        self.gradient_calls = 0
