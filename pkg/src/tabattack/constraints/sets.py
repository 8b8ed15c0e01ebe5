"""Linked constraint sets: naming, assignment analysis, and validity checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabattack.constraints import expr as E
from tabattack.constraints import penalty as P
from tabattack.data.schema import CATEGORICAL, DISCRETE, Schema
from tabattack.exceptions import CircularAssignmentError, ConstraintEvalError, ConstraintLinkError

DEFAULT_TAU = 1e-6
DEFAULT_SATISFACTION_TOL = 1e-9

# Numeric slack for float round-trips through scaling when checking bounds,
# discrete integrality, and categorical levels.
_TYPE_TOL = 1e-9


@dataclass(frozen=True)
class NamedConstraint:
    name: str
    expr: E.ConstraintExpr
    uses_division: bool


@dataclass(frozen=True)
class Assignment:
    """An equality of the shape ``F[target] = rhs`` that repair can enforce."""

    target: int
    rhs: E.NumericExpr
    constraint_name: str


@dataclass(frozen=True)
class ConstraintSet:
    """Immutable, schema-linked set of relation constraints.

    ``assignments`` lists the repairable equalities in topological order of
    their feature-dependency graph; linking rejects circular dependencies.
    """

    constraints: tuple[NamedConstraint, ...]
    tau: float
    satisfaction_tol: float
    schema: Schema
    assignments: tuple[Assignment, ...] = field(default=())

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)

    @property
    def has_relations(self) -> bool:
        return len(self.constraints) > 0

    def without_relations(self) -> "ConstraintSet":
        """The same linked set with every relation constraint removed.

        Models an attacker who keeps boundary/type/mutability knowledge but
        has no access to the feature-relation constraints.
        """
        return ConstraintSet(
            constraints=(),
            tau=self.tau,
            satisfaction_tol=self.satisfaction_tol,
            schema=self.schema,
            assignments=(),
        )


def _extract_assignment(name: str, node: E.ConstraintExpr, schema: Schema) -> Assignment | None:
    if not isinstance(node, E.Compare) or node.op != "=":
        return None
    if not isinstance(node.left, E.Feature):
        return None
    target = node.left.index
    if target in E.referenced_features(node.right):
        return None
    # Immutable targets cannot be written by the attacker-side repair
    # operator; the equality stays penalty-guided only.
    if not schema.features[target].mutable:
        return None
    return Assignment(target=target, rhs=node.right, constraint_name=name)


def _order_assignments(assignments: list[Assignment]) -> tuple[Assignment, ...]:
    targets = {}
    for a in assignments:
        if a.target in targets:
            raise ConstraintLinkError(
                f"constraints {targets[a.target]!r} and {a.constraint_name!r} both assign "
                f"the same feature"
            )
        targets[a.target] = a.constraint_name
    # Kahn topological sort over edges rhs-dependency -> target.
    deps = {
        a.target: {f for f in E.referenced_features(a.rhs) if f in targets}
        for a in assignments
    }
    by_target = {a.target: a for a in assignments}
    ordered: list[Assignment] = []
    ready = [a.target for a in assignments if not deps[a.target]]
    while ready:
        t = ready.pop(0)
        ordered.append(by_target[t])
        for other, dep in deps.items():
            if t in dep:
                dep.discard(t)
                if not dep and other not in (o.target for o in ordered) and other not in ready:
                    ready.append(other)
    if len(ordered) != len(assignments):
        cyclic = sorted(
            by_target[t].constraint_name for t in deps if t not in (o.target for o in ordered)
        )
        raise CircularAssignmentError(
            f"assignment constraints form a dependency cycle: {', '.join(cyclic)}"
        )
    return tuple(ordered)


def link(
    named_exprs: list[tuple[str, E.ConstraintExpr]],
    schema: Schema,
    tau: float = DEFAULT_TAU,
    satisfaction_tol: float = DEFAULT_SATISFACTION_TOL,
) -> ConstraintSet:
    """Bind parsed constraints to a schema and precompute repair structure."""
    if not tau > 0:
        raise ConstraintLinkError("strict margin tau must be positive")
    if satisfaction_tol < 0:
        raise ConstraintLinkError("satisfaction tolerance must be non-negative")
    seen = set()
    constraints = []
    assignments = []
    for name, node in named_exprs:
        if name in seen:
            raise ConstraintLinkError(f"duplicate constraint name {name!r}")
        seen.add(name)
        for idx in E.referenced_features(node):
            if not 0 <= idx < schema.d:
                raise ConstraintLinkError(f"constraint {name!r} references feature index {idx}")
        constraints.append(NamedConstraint(name, node, E.uses_division(node)))
        assignment = _extract_assignment(name, node, schema)
        if assignment is not None:
            assignments.append(assignment)
    return ConstraintSet(
        constraints=tuple(constraints),
        tau=tau,
        satisfaction_tol=satisfaction_tol,
        schema=schema,
        assignments=_order_assignments(assignments),
    )


def format_constraint_set(cset: ConstraintSet) -> str:
    """Canonical DSL source: one ``name: expression`` line per constraint."""
    return "\n".join(f"{c.name}: {E.format_constraint(c.expr)}" for c in cset.constraints)


# validity checking -----------------------------------------------------------


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the full domain-validity check at one point."""

    relation_ok: tuple[tuple[str, bool], ...]
    bounds_violations: tuple[str, ...]
    type_violations: tuple[str, ...]
    overall: bool

    def failures(self) -> list[str]:
        out = [f"relation {name}" for name, ok in self.relation_ok if not ok]
        out += [f"bounds {name}" for name in self.bounds_violations]
        out += [f"type {name}" for name in self.type_violations]
        return out


def check(
    x: np.ndarray, cset: ConstraintSet, schema: Schema | None = None, x0: np.ndarray | None = None
) -> ValidityReport:
    """Check one point (original units) for relation, bound, and type validity.

    ``x0`` supplies original values referenced by ``X0[...]``; it defaults to
    ``x`` itself, which is the right reading for standalone rows.
    """
    schema = schema if schema is not None else cset.schema
    x = np.asarray(x, dtype=float)
    if x0 is None:
        x0 = x
    relation_ok = []
    for item in cset.constraints:
        try:
            value = P.penalty(x, item.expr, x0, cset.tau)
            relation_ok.append((item.name, bool(value <= cset.satisfaction_tol)))
        except ConstraintEvalError:
            relation_ok.append((item.name, False))
    bounds_bad = []
    types_bad = []
    for i, f in enumerate(schema.features):
        v = x[i]
        if not (f.lower - _TYPE_TOL <= v <= f.upper + _TYPE_TOL):
            bounds_bad.append(f.name)
        if f.ftype == DISCRETE:
            if abs(v - np.round(v)) > _TYPE_TOL:
                types_bad.append(f.name)
        elif f.ftype == CATEGORICAL:
            assert f.levels is not None
            if np.min(np.abs(np.asarray(f.levels) - v)) > _TYPE_TOL:
                types_bad.append(f.name)
    overall = (
        all(ok for _, ok in relation_ok) and not bounds_bad and not types_bad
    )
    return ValidityReport(
        relation_ok=tuple(relation_ok),
        bounds_violations=tuple(bounds_bad),
        type_violations=tuple(types_bad),
        overall=overall,
    )


def check_batch(
    X: np.ndarray, cset: ConstraintSet, schema: Schema | None = None, X0: np.ndarray | None = None
) -> np.ndarray:
    """Vectorized overall-validity flags for a batch of rows; returns (n,) bools."""
    schema = schema if schema is not None else cset.schema
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X0 is None:
        X0 = X
    ok = np.ones(X.shape[0], dtype=bool)
    X0b = X0 if np.asarray(X0).ndim == 2 else np.asarray(X0, dtype=float)[None, :]
    for item in cset.constraints:
        try:
            pen = P.constraint_penalty_batch(item.expr, X, X0, cset.tau)
            ok &= pen <= cset.satisfaction_tol
        except ConstraintEvalError:
            # Division by zero somewhere in the batch: fall back to per-row
            # evaluation and mark the offending rows invalid.
            for r in range(X.shape[0]):
                row0 = X0b[r] if X0b.shape[0] == X.shape[0] else X0b[0]
                try:
                    ok[r] &= P.penalty(X[r], item.expr, row0, cset.tau) <= cset.satisfaction_tol
                except ConstraintEvalError:
                    ok[r] = False
    lowers, uppers = schema.lowers, schema.uppers
    ok &= np.all(X >= lowers - _TYPE_TOL, axis=1)
    ok &= np.all(X <= uppers + _TYPE_TOL, axis=1)
    for i, f in enumerate(schema.features):
        if f.ftype == DISCRETE:
            ok &= np.abs(X[:, i] - np.round(X[:, i])) <= _TYPE_TOL
        elif f.ftype == CATEGORICAL:
            assert f.levels is not None
            gaps = np.abs(X[:, i][:, None] - np.asarray(f.levels)[None, :]).min(axis=1)
            ok &= gaps <= _TYPE_TOL
    return ok
