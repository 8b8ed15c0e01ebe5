"""Adaptive constrained PGD: momentum, checkpointed step halving, restarts.

The update interleaves a plain projected step z with a momentum combination
of the two previous iterates, then repairs. The step size starts at 2*epsilon
and is halved at checkpoints when progress stalls; on halving, the search
restarts from the best iterate seen so far and the momentum history is
cleared. The attack returns the best-objective iterate, never a worse final
one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import ceil

import numpy as np

from tabattack.attacks.common import (
    AttackOutcome,
    cross_entropy_from_probs,
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


def default_checkpoints(n_iter: int) -> tuple[int, ...]:
    """Checkpoint iterations 0 = w_0 < w_1 < ... <= n_iter.

    Fractions follow p_0 = 0, p_1 = 0.22, p_{j+1} = p_j + max(p_j - p_{j-1}
    - 0.03, 0.06), mapped through ceil(p * n_iter).
    """
    fractions = [0.0, 0.22]
    while fractions[-1] < 1.0:
        fractions.append(fractions[-1] + max(fractions[-1] - fractions[-2] - 0.03, 0.06))
    points = [0]
    for p in fractions[1:]:
        w = min(ceil(p * n_iter), n_iter)
        if w > points[-1]:
            points.append(w)
    return tuple(points)


@dataclass(frozen=True)
class CapgdConfig:
    epsilon: float
    n_iter: int = 10
    alpha: float = 0.75
    rho: float = 0.75
    checkpoints: tuple[int, ...] | None = None
    enforce_constraints: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.n_iter < 1:
            raise ConfigError("n_iter must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)")
        if self.checkpoints is not None:
            w = self.checkpoints
            if not w or w[0] != 0:
                raise ConfigError("checkpoint schedule must start at 0")
            if any(b <= a for a, b in zip(w, w[1:])) or w[-1] > self.n_iter:
                raise ConfigError("checkpoints must be strictly increasing and <= n_iter")

    def resolved_checkpoints(self) -> tuple[int, ...]:
        return self.checkpoints if self.checkpoints is not None else default_checkpoints(self.n_iter)


def capgd(
    x0_scaled: np.ndarray,
    y: int,
    access: ModelAccess,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    cfg: CapgdConfig,
    trace_sink: list | None = None,
) -> AttackOutcome:
    access._require(WHITEBOX, "capgd")
    start = time.perf_counter()
    mask = schema.mutable_mask
    x0_orig = scaler.unscale(x0_scaled)
    use_penalty = cfg.enforce_constraints and cset.has_relations
    checkpoints = cfg.resolved_checkpoints()

    query_count = 0

    def objective(x: np.ndarray) -> float:
        nonlocal query_count
        probs = access.predict_proba(x)
        query_count += 1
        value = cross_entropy_from_probs(probs, y)
        if use_penalty:
            pen, _ = penalty_and_grad_scaled(x, cset, x0_orig, scaler)
            value -= pen
        return value

    x = np.asarray(x0_scaled, dtype=float).copy()
    x_prev = x.copy()
    f_curr = objective(x)
    best_x, best_f = x.copy(), f_curr
    if trace_sink is not None:
        trace_sink.append((x.copy(), f_curr))

    eta = 2.0 * cfg.epsilon
    improved = 0
    steps_since = 0
    next_ckpt = 1
    best_at_last_ckpt = best_f
    reduced_at_last_ckpt = False
    gradient_calls = 0

    for k in range(cfg.n_iter):
        _, grad = access.loss_gradient(x, y)
        gradient_calls += 1
        if use_penalty:
            _, pen_grad = penalty_and_grad_scaled(x, cset, x0_orig, scaler)
            grad = grad - pen_grad
        if not np.all(np.isfinite(grad)):
            return AttackOutcome(
                candidate=best_x,
                success=False,
                gradient_calls=gradient_calls,
                queries=query_count,
                wall_time=time.perf_counter() - start,
                diagnostic=f"non-finite gradient at iteration {k}",
            )
        z = project(x0_scaled, x + eta * scaled_sign(grad, mask), cfg.epsilon, mask)
        momentum = cfg.alpha * (z - x) + (1.0 - cfg.alpha) * (x - x_prev)
        x_next = project(x0_scaled, x + momentum, cfg.epsilon, mask)
        x_next = repair_scaled(
            x0_scaled, x_next, cset, schema, scaler, include_relations=cfg.enforce_constraints
        )
        f_next = objective(x_next)
        if f_next > f_curr:
            improved += 1
        steps_since += 1
        x_prev, x, f_curr = x, x_next, f_next
        if f_next > best_f:
            best_x, best_f = x_next.copy(), f_next
        if trace_sink is not None:
            trace_sink.append((x_next.copy(), f_next))
        if next_ckpt < len(checkpoints) and (k + 1) == checkpoints[next_ckpt]:
            stalled = improved < cfg.rho * steps_since
            flat = (not reduced_at_last_ckpt) and (best_f == best_at_last_ckpt)
            if stalled or flat:
                eta /= 2.0
                x = best_x.copy()
                x_prev = best_x.copy()
                f_curr = best_f
                reduced_at_last_ckpt = True
            else:
                reduced_at_last_ckpt = False
            best_at_last_ckpt = best_f
            improved = 0
            steps_since = 0
            next_ckpt += 1

    success = evaluate_success(
        x0_scaled, best_x, y, access.model, cset, schema, scaler, cfg.epsilon
    )
    return AttackOutcome(
        candidate=best_x,
        success=success,
        gradient_calls=gradient_calls,
        queries=query_count,
        wall_time=time.perf_counter() - start,
    )
