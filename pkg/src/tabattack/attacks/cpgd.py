"""Constrained projected gradient descent with a penalty-augmented loss.

Each iteration takes an L2-normalized masked step along the gradient of
(loss - total penalty), projects into the box-and-ball feasible set, and
repairs type and assignment violations. The step size follows the decaying
schedule eta_k = epsilon * 10^-(1 + floor(k / floor(n_iter / M))).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from tabattack.attacks.common import (
    AttackOutcome,
    evaluate_success,
    penalty_and_grad_scaled,
    project,
    repair_scaled,
    scaled_sign,
)
from tabattack.constraints.sets import ConstraintSet
from tabattack.data.scaling import Scaler
from tabattack.data.schema import Schema
from tabattack.exceptions import ConfigError
from tabattack.model.access import WHITEBOX, ModelAccess


@dataclass(frozen=True)
class CpgdConfig:
    epsilon: float
    n_iter: int = 10
    m: int = 7  # lower-bound parameter of the step schedule
    enforce_constraints: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.n_iter < 1:
            raise ConfigError("n_iter must be at least 1")
        if not 1 <= self.m <= self.n_iter:
            raise ConfigError("schedule parameter m must satisfy 1 <= m <= n_iter")


def step_schedule(cfg: CpgdConfig) -> np.ndarray:
    """Step sizes eta_k for k = 0 .. n_iter-1; non-increasing in k.

    Scalar powers keep each entry at the correctly rounded value of
    epsilon * 10^-(1 + floor(k / floor(n_iter / m))).
    """
    period = cfg.n_iter // cfg.m
    return np.array([cfg.epsilon * 10.0 ** -(1 + k // period) for k in range(cfg.n_iter)])


def cpgd(
    x0_scaled: np.ndarray,
    y: int,
    access: ModelAccess,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    cfg: CpgdConfig,
) -> AttackOutcome:
    access._require(WHITEBOX, "cpgd")
    start = time.perf_counter()
    mask = schema.mutable_mask
    x0_orig = scaler.unscale(x0_scaled)
    use_penalty = cfg.enforce_constraints and cset.has_relations
    etas = step_schedule(cfg)
    x = np.asarray(x0_scaled, dtype=float).copy()
    gradient_calls = 0
    for k in range(cfg.n_iter):
        _, grad = access.loss_gradient(x, y)
        gradient_calls += 1
        if use_penalty:
            _, pen_grad = penalty_and_grad_scaled(x, cset, x0_orig, scaler)
            grad = grad - pen_grad
        if not np.all(np.isfinite(grad)):
            return AttackOutcome(
                candidate=x,
                success=False,
                gradient_calls=gradient_calls,
                wall_time=time.perf_counter() - start,
                diagnostic=f"non-finite gradient at iteration {k}",
            )
        x = project(x0_scaled, x + etas[k] * scaled_sign(grad, mask), cfg.epsilon, mask)
        x = repair_scaled(
            x0_scaled, x, cset, schema, scaler, include_relations=cfg.enforce_constraints
        )
    success = evaluate_success(
        x0_scaled, x, y, access.model, cset, schema, scaler, cfg.epsilon
    )
    return AttackOutcome(
        candidate=x,
        success=success,
        gradient_calls=gradient_calls,
        wall_time=time.perf_counter() - start,
    )
