"""Shared attack mechanics: step directions, feasible projection, outcomes.

All attacks operate in the scaled [0, 1]^d cube. Relation penalties are
evaluated in original units and chained back through the per-feature scaling
ranges, so the perturbation budget stays unit-free while constraint semantics
stay exact.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from tabattack.constraints.penalty import penalty_value_and_gradient
from tabattack.constraints.repair import repair
from tabattack.constraints.sets import ConstraintSet, check
from tabattack.data.scaling import Scaler
from tabattack.data.schema import Schema

BUDGET_SLACK = 1e-6
_LOG_EPS = 1e-12


def derive_seed(global_seed: int, example_index: int, stage: str) -> int:
    """Stable per-example, per-stage RNG seed.

    Standalone and in-cascade runs of the same stage on the same example see
    identical randomness, which makes cascade dominance exact.
    """
    digest = hashlib.sha256(f"{global_seed}:{example_index}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def scaled_sign(g: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """L2-normalized step direction with immutable coordinates zeroed first."""
    g = np.asarray(g, dtype=float)
    if mask is not None:
        g = np.where(mask, g, 0.0)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return np.zeros_like(g)
    return g / norm


def project(
    x0: np.ndarray,
    candidate: np.ndarray,
    epsilon: float,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Project a scaled candidate into the box-and-ball feasible set.

    Immutable coordinates are reset to the original, the point is clipped to
    [0, 1]^d, and the perturbation is radially rescaled onto the L2 ball.
    Because rescaling shrinks toward a box point, the result lies in the
    intersection and is a fixed point of alternating box/ball projection.
    """
    x0 = np.asarray(x0, dtype=float)
    out = np.asarray(candidate, dtype=float).copy()
    if mask is not None:
        out = np.where(mask, out, x0)
    np.clip(out, 0.0, 1.0, out=out)
    delta = out - x0
    norm = float(np.linalg.norm(delta))
    if norm > epsilon:
        out = x0 + delta * (epsilon / norm)
        if mask is not None:
            out = np.where(mask, out, x0)
    return out


def cross_entropy_from_probs(probs: np.ndarray, y: int) -> float:
    return -float(np.log(max(float(probs[y]), _LOG_EPS)))


def penalty_and_grad_scaled(
    x_scaled: np.ndarray, cset: ConstraintSet, x0_orig: np.ndarray, scaler: Scaler
) -> tuple[float, np.ndarray]:
    """Total penalty at a scaled point and its gradient in scaled coordinates."""
    x_orig = scaler.unscale(x_scaled)
    value, grad_orig = penalty_value_and_gradient(x_orig, cset, x0_orig)
    return value, grad_orig * scaler.ranges


def repair_scaled(
    x0_scaled: np.ndarray,
    cand_scaled: np.ndarray,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    include_relations: bool = True,
) -> np.ndarray:
    """Run the repair operator in original units, then return to scaled space."""
    x0_orig = scaler.unscale(x0_scaled)
    cand_orig = scaler.unscale(cand_scaled)
    fixed = repair(x0_orig, cand_orig, cset, schema, include_relations=include_relations)
    out = scaler.scale(fixed)
    # Keep untouched coordinates bitwise identical to the candidate so
    # immutable features survive scale/unscale round-trips exactly.
    unchanged = fixed == cand_orig
    return np.where(unchanged, cand_scaled, out)


@dataclass
class AttackOutcome:
    """Per-example attack result in scaled coordinates."""

    candidate: np.ndarray
    success: bool
    gradient_calls: int = 0
    queries: int = 0
    wall_time: float = 0.0
    diagnostic: str | None = None


def within_budget(x0_scaled: np.ndarray, cand_scaled: np.ndarray, epsilon: float) -> bool:
    return float(np.linalg.norm(cand_scaled - x0_scaled)) <= epsilon + BUDGET_SLACK


def immutables_preserved(
    x0_scaled: np.ndarray, cand_scaled: np.ndarray, schema: Schema
) -> bool:
    frozen = ~schema.mutable_mask
    return bool(np.all(cand_scaled[frozen] == x0_scaled[frozen]))


def evaluate_success(
    x0_scaled: np.ndarray,
    cand_scaled: np.ndarray,
    y: int,
    model,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    epsilon: float,
) -> bool:
    """Success predicate: label flipped, constraints valid, within budget.

    Uses a direct model forward (not the attacker's metered access); this is
    the validation step shared by attacks and the harness gate.
    """
    if not within_budget(x0_scaled, cand_scaled, epsilon):
        return False
    if not immutables_preserved(x0_scaled, cand_scaled, schema):
        return False
    cand_orig = scaler.unscale(cand_scaled)
    x0_orig = scaler.unscale(x0_scaled)
    if not check(cand_orig, cset, schema, x0=x0_orig).overall:
        return False
    probs = model.forward_batch(cand_scaled)
    return int(np.argmax(probs)) != int(y)
