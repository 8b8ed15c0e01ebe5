"""Penalty compilation: distance-to-satisfaction values and subgradients.

Each constraint expression maps to a non-negative penalty that is zero
exactly when the constraint holds:

    a and b   ->  pen(a) + pen(b)
    a or b    ->  min(pen(a), pen(b))
    e in S    ->  min over s in S of |e - s|
    l <= r    ->  max(0, l - r)
    l <  r    ->  max(0, l - r + tau)
    l  = r    ->  |l - r|
    l != r    ->  max(0, tau - |l - r|)

``>=`` and ``>`` are evaluated by swapping operands. ``tau`` is the strict
margin: ``l < r`` is satisfied only when ``l + tau <= r``, and ``l != r``
only when the values differ by at least ``tau``.

Value evaluation is vectorized over a batch of rows. The gradient walker is
per-example and returns a deterministic subgradient: hinge and absolute-value
kinks contribute zero, and min-reductions break ties toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabattack.constraints.expr import (
    And,
    Binary,
    Compare,
    ConstraintExpr,
    Constant,
    Feature,
    Membership,
    NumericExpr,
    Or,
    OriginalValue,
)
from tabattack.exceptions import ConstraintEvalError


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def numeric_value_batch(expr: NumericExpr, x: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Evaluate a numeric expression on a batch of rows; returns shape (n,).

    ``x`` has shape (n, d) or (d,); ``x0`` broadcasts against it. Division by
    zero anywhere in the batch is a hard error.
    """
    x = _as_batch(x)
    x0 = _as_batch(x0)
    return _numeric_batch(expr, x, x0)


def _numeric_batch(expr: NumericExpr, x: np.ndarray, x0: np.ndarray) -> np.ndarray:
    match expr:
        case Constant(value=v):
            return np.full(x.shape[0], v)
        case Feature(index=i):
            return x[:, i]
        case OriginalValue(index=i):
            col = x0[:, i]
            return np.broadcast_to(col, (x.shape[0],)) if col.shape[0] != x.shape[0] else col
        case Binary(op=op, left=l, right=r):
            lv = _numeric_batch(l, x, x0)
            rv = _numeric_batch(r, x, x0)
            if op == "+":
                return lv + rv
            if op == "-":
                return lv - rv
            if op == "*":
                return lv * rv
            if np.any(rv == 0.0):
                raise ConstraintEvalError("division by zero in numeric expression")
            return lv / rv
    raise TypeError(f"not a numeric expression: {expr!r}")


def constraint_penalty_batch(
    expr: ConstraintExpr, x: np.ndarray, x0: np.ndarray, tau: float
) -> np.ndarray:
    """Penalty of one constraint on a batch of rows; returns shape (n,)."""
    x = _as_batch(x)
    x0 = _as_batch(x0)
    return _penalty_batch(expr, x, x0, tau)


def _penalty_batch(expr: ConstraintExpr, x: np.ndarray, x0: np.ndarray, tau: float) -> np.ndarray:
    match expr:
        case And(left=l, right=r):
            return _penalty_batch(l, x, x0, tau) + _penalty_batch(r, x, x0, tau)
        case Or(left=l, right=r):
            return np.minimum(_penalty_batch(l, x, x0, tau), _penalty_batch(r, x, x0, tau))
        case Compare(op=op, left=l, right=r):
            lv = _numeric_batch(l, x, x0)
            rv = _numeric_batch(r, x, x0)
            if op in (">=", ">"):
                lv, rv = rv, lv
                op = "<=" if op == ">=" else "<"
            u = lv - rv
            if op == "<=":
                return np.maximum(0.0, u)
            if op == "<":
                return np.maximum(0.0, u + tau)
            if op == "=":
                return np.abs(u)
            return np.maximum(0.0, tau - np.abs(u))  # !=
        case Membership(expr=e, choices=choices):
            v = _numeric_batch(e, x, x0)
            gaps = np.stack([np.abs(v - _numeric_batch(c, x, x0)) for c in choices])
            return gaps.min(axis=0)
    raise TypeError(f"not a constraint expression: {expr!r}")


def penalty(x: np.ndarray, expr: ConstraintExpr, x0: np.ndarray, tau: float) -> float:
    """Penalty of one constraint at a single point, in original units."""
    return float(constraint_penalty_batch(expr, x, x0, tau)[0])


@dataclass(frozen=True)
class PenaltyReport:
    """Per-constraint penalties and their sum g(x)."""

    per_constraint: tuple[tuple[str, float], ...]
    total: float


def penalty_report(x: np.ndarray, cset, x0: np.ndarray) -> PenaltyReport:
    """Evaluate every relation constraint of a linked set at one point."""
    per = []
    total = 0.0
    for item in cset.constraints:
        try:
            value = penalty(x, item.expr, x0, cset.tau)
        except ConstraintEvalError as exc:
            raise ConstraintEvalError(str(exc), constraint_name=item.name) from None
        per.append((item.name, value))
        total += value
    return PenaltyReport(per_constraint=tuple(per), total=total)


def total_penalty_batch(X: np.ndarray, cset, X0: np.ndarray) -> np.ndarray:
    """Sum of all constraint penalties for each row; returns shape (n,)."""
    X = _as_batch(X)
    total = np.zeros(X.shape[0])
    for item in cset.constraints:
        try:
            total += constraint_penalty_batch(item.expr, X, X0, cset.tau)
        except ConstraintEvalError as exc:
            raise ConstraintEvalError(str(exc), constraint_name=item.name) from None
    return total


# gradient walker ------------------------------------------------------------


def _numeric_grad(expr: NumericExpr, x: np.ndarray, x0: np.ndarray) -> tuple[float, np.ndarray]:
    d = x.shape[0]
    match expr:
        case Constant(value=v):
            return v, np.zeros(d)
        case Feature(index=i):
            g = np.zeros(d)
            g[i] = 1.0
            return float(x[i]), g
        case OriginalValue(index=i):
            return float(x0[i]), np.zeros(d)
        case Binary(op=op, left=l, right=r):
            lv, lg = _numeric_grad(l, x, x0)
            rv, rg = _numeric_grad(r, x, x0)
            if op == "+":
                return lv + rv, lg + rg
            if op == "-":
                return lv - rv, lg - rg
            if op == "*":
                return lv * rv, lv * rg + rv * lg
            if rv == 0.0:
                raise ConstraintEvalError("division by zero in numeric expression")
            return lv / rv, lg / rv - lv * rg / (rv * rv)
    raise TypeError(f"not a numeric expression: {expr!r}")


def _penalty_grad(
    expr: ConstraintExpr, x: np.ndarray, x0: np.ndarray, tau: float
) -> tuple[float, np.ndarray]:
    match expr:
        case And(left=l, right=r):
            lv, lg = _penalty_grad(l, x, x0, tau)
            rv, rg = _penalty_grad(r, x, x0, tau)
            return lv + rv, lg + rg
        case Or(left=l, right=r):
            lv, lg = _penalty_grad(l, x, x0, tau)
            rv, rg = _penalty_grad(r, x, x0, tau)
            return (lv, lg) if lv <= rv else (rv, rg)
        case Compare(op=op, left=l, right=r):
            if op in (">=", ">"):
                l, r = r, l
                op = "<=" if op == ">=" else "<"
            lv, lg = _numeric_grad(l, x, x0)
            rv, rg = _numeric_grad(r, x, x0)
            u = lv - rv
            gu = lg - rg
            if op == "<=":
                return (u, gu) if u > 0.0 else (0.0, np.zeros_like(gu))
            if op == "<":
                v = u + tau
                return (v, gu) if v > 0.0 else (0.0, np.zeros_like(gu))
            if op == "=":
                if u > 0.0:
                    return u, gu
                if u < 0.0:
                    return -u, -gu
                return 0.0, np.zeros_like(gu)
            # != : max(0, tau - |u|); subgradient of |u| at 0 is taken as 0
            w = tau - abs(u)
            if w <= 0.0:
                return max(w, 0.0), np.zeros_like(gu)
            if u > 0.0:
                return w, -gu
            if u < 0.0:
                return w, gu
            return w, np.zeros_like(gu)
        case Membership(expr=e, choices=choices):
            ev, eg = _numeric_grad(e, x, x0)
            best_val: float | None = None
            best_grad: np.ndarray | None = None
            for c in choices:
                cv, cg = _numeric_grad(c, x, x0)
                u = ev - cv
                gap = abs(u)
                if best_val is None or gap < best_val:
                    if u > 0.0:
                        grad = eg - cg
                    elif u < 0.0:
                        grad = cg - eg
                    else:
                        grad = np.zeros_like(eg)
                    best_val = gap
                    best_grad = grad
            assert best_val is not None and best_grad is not None
            return best_val, best_grad
    raise TypeError(f"not a constraint expression: {expr!r}")


def penalty_gradient(x: np.ndarray, cset, x0: np.ndarray) -> np.ndarray:
    """Subgradient of the total penalty at ``x``; one entry per feature.

    Where the total penalty is differentiable this is the exact gradient.
    """
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros(x.shape[0])
    for item in cset.constraints:
        try:
            _, g = _penalty_grad(item.expr, x, x0, cset.tau)
        except ConstraintEvalError as exc:
            raise ConstraintEvalError(str(exc), constraint_name=item.name) from None
        grad += g
    return grad


def penalty_value_and_gradient(
    x: np.ndarray, cset, x0: np.ndarray
) -> tuple[float, np.ndarray]:
    """Total penalty and its subgradient in one walk."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    total = 0.0
    grad = np.zeros(x.shape[0])
    for item in cset.constraints:
        try:
            v, g = _penalty_grad(item.expr, x, x0, cset.tau)
        except ConstraintEvalError as exc:
            raise ConstraintEvalError(str(exc), constraint_name=item.name) from None
        total += v
        grad += g
    return total, grad
