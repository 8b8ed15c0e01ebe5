"""Small feedforward binary classifier with exact analytic input gradients.

ReLU hidden layers, a two-unit softmax head, pure numpy throughout. Forward
passes and gradients are deterministic functions of the weights and input,
which keeps attacks and training bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tabattack.exceptions import ConfigError

_LOG_EPS = 1e-12


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int = 0
    fingerprint: str = ""

    @classmethod
    def initialize(cls, layer_sizes: list[int] | tuple[int, ...], seed: int) -> "MlpModel":
        """He-uniform initialization from the given seed."""
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or sizes[-1] != 2:
            raise ConfigError("layer sizes must run from input dimension to a 2-unit output")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes=sizes, weights=weights, biases=biases, seed=seed)

    @classmethod
    def zeros(cls, layer_sizes: list[int] | tuple[int, ...]) -> "MlpModel":
        sizes = tuple(int(s) for s in layer_sizes)
        weights = [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(o) for o in sizes[1:]]
        return cls(layer_sizes=sizes, weights=weights, biases=biases, seed=0)

    @property
    def d(self) -> int:
        return self.layer_sizes[0]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            seed=self.seed,
            fingerprint=self.fingerprint,
        )

    # inference -------------------------------------------------------------

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1
        a = X[None, :] if squeeze else X
        if a.shape[1] != self.d:
            raise ConfigError(f"input has {a.shape[1]} features, model expects {self.d}")
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W.T + b, 0.0)
        probs = _softmax(a @ self.weights[-1].T + self.biases[-1])
        return probs[0] if squeeze else probs

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_batch(np.asarray(x, dtype=float))

    def predict(self, X: np.ndarray) -> np.ndarray:
        probs = self.forward_batch(X)
        if probs.ndim == 1:
            return int(np.argmax(probs))
        return np.argmax(probs, axis=1)

    # gradients ---------------------------------------------------------------

    def _forward_cached(self, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        activations = [X]
        pre_acts = []
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W.T + b
            pre_acts.append(z)
            a = np.maximum(z, 0.0)
            activations.append(a)
        logits = a @ self.weights[-1].T + self.biases[-1]
        return activations, pre_acts, logits

    def loss_and_input_gradient(self, x: np.ndarray, y: int) -> tuple[float, np.ndarray]:
        """Cross-entropy loss at one point and its exact gradient w.r.t. the input."""
        x = np.asarray(x, dtype=float)
        activations, pre_acts, logits = self._forward_cached(x[None, :])
        probs = _softmax(logits)[0]
        loss = -float(np.log(max(probs[y], _LOG_EPS)))
        delta = probs.copy()
        delta[y] -= 1.0
        grad = delta @ self.weights[-1]
        for W, z in zip(reversed(self.weights[:-1]), reversed(pre_acts)):
            grad = (grad * (z[0] > 0.0)) @ W
        return loss, grad

    def loss_and_param_gradients(
        self, X: np.ndarray, y: np.ndarray
    ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
        """Mean cross-entropy over a batch and gradients for every layer."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n = X.shape[0]
        activations, pre_acts, logits = self._forward_cached(X)
        probs = _softmax(logits)
        loss = -float(np.mean(np.log(np.maximum(probs[np.arange(n), y], _LOG_EPS))))
        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grads_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = delta.T @ activations[layer]
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer]) * (pre_acts[layer - 1] > 0.0)
        return loss, grads_w, grads_b

    def input_gradients_batch(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Per-row cross-entropy input gradients for a batch; returns (n, d)."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n = X.shape[0]
        _, pre_acts, logits = self._forward_cached(X)
        delta = _softmax(logits)
        delta[np.arange(n), y] -= 1.0
        grad = delta @ self.weights[-1]
        for W, z in zip(reversed(self.weights[:-1]), reversed(pre_acts)):
            grad = (grad * (z > 0.0)) @ W
        return grad

    # serialization -------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MlpModel":
        sizes = tuple(int(s) for s in obj["layer_sizes"])
        weights = [
            np.asarray(flat, dtype=float).reshape(o, i)
            for flat, i, o in zip(obj["weights"], sizes[:-1], sizes[1:])
        ]
        biases = [np.asarray(b, dtype=float) for b in obj["biases"]]
        return cls(
            layer_sizes=sizes,
            weights=weights,
            biases=biases,
            seed=int(obj.get("seed", 0)),
            fingerprint=obj.get("fingerprint", ""),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))
