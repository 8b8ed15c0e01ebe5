"""AST node types for the constraint language and the canonical printer.

Numeric expressions combine constants, current feature values ``F[name]``,
original (pre-perturbation) feature values ``X0[name]``, and the four
arithmetic operators. Constraint expressions combine comparisons and
membership tests with ``and`` / ``or``. Trees are immutable; structural
equality is the dataclass field-wise one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

ARITH_OPS = ("+", "-", "*", "/")
REL_OPS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Feature:
    """Current value of a feature, resolved to its schema index."""

    index: int
    name: str


@dataclass(frozen=True)
class OriginalValue:
    """Value of a feature in the original (unperturbed) example."""

    index: int
    name: str


@dataclass(frozen=True)
class Binary:
    op: str
    left: "NumericExpr"
    right: "NumericExpr"


NumericExpr = Union[Constant, Feature, OriginalValue, Binary]


@dataclass(frozen=True)
class Compare:
    op: str
    left: NumericExpr
    right: NumericExpr


@dataclass(frozen=True)
class Membership:
    """``expr in {choices...}``; the choice set is non-empty by construction."""

    expr: NumericExpr
    choices: tuple[NumericExpr, ...]


@dataclass(frozen=True)
class And:
    left: "ConstraintExpr"
    right: "ConstraintExpr"


@dataclass(frozen=True)
class Or:
    left: "ConstraintExpr"
    right: "ConstraintExpr"


ConstraintExpr = Union[And, Or, Compare, Membership]


def is_numeric(node: object) -> bool:
    return isinstance(node, (Constant, Feature, OriginalValue, Binary))


def is_constraint(node: object) -> bool:
    return isinstance(node, (And, Or, Compare, Membership))


def format_numeric(expr: NumericExpr) -> str:
    """Canonical fully parenthesized rendering of a numeric expression."""
    match expr:
        case Constant(value=v):
            return repr(v)
        case Feature(name=name):
            return f"F[{name}]"
        case OriginalValue(name=name):
            return f"X0[{name}]"
        case Binary(op=op, left=l, right=r):
            return f"({format_numeric(l)} {op} {format_numeric(r)})"
    raise TypeError(f"not a numeric expression: {expr!r}")


def format_constraint(expr: ConstraintExpr) -> str:
    """Canonical fully parenthesized rendering of a constraint expression."""
    match expr:
        case Compare(op=op, left=l, right=r):
            return f"({format_numeric(l)} {op} {format_numeric(r)})"
        case Membership(expr=e, choices=choices):
            inner = ", ".join(format_numeric(c) for c in choices)
            return f"({format_numeric(e)} in {{{inner}}})"
        case And(left=l, right=r):
            return f"({format_constraint(l)} and {format_constraint(r)})"
        case Or(left=l, right=r):
            return f"({format_constraint(l)} or {format_constraint(r)})"
    raise TypeError(f"not a constraint expression: {expr!r}")


def referenced_features(node: NumericExpr | ConstraintExpr) -> frozenset[int]:
    """Indices of features whose *current* value the expression reads.

    ``X0[...]`` references are constants of the perturbation problem and are
    deliberately excluded.
    """
    match node:
        case Constant() | OriginalValue():
            return frozenset()
        case Feature(index=i):
            return frozenset((i,))
        case Binary(left=l, right=r) | Compare(left=l, right=r) | And(left=l, right=r) | Or(
            left=l, right=r
        ):
            return referenced_features(l) | referenced_features(r)
        case Membership(expr=e, choices=choices):
            out = referenced_features(e)
            for c in choices:
                out |= referenced_features(c)
            return out
    raise TypeError(f"not an expression node: {node!r}")


def uses_division(node: NumericExpr | ConstraintExpr) -> bool:
    """True if any numeric subexpression contains a division node."""
    match node:
        case Constant() | Feature() | OriginalValue():
            return False
        case Binary(op=op, left=l, right=r):
            return op == "/" or uses_division(l) or uses_division(r)
        case Compare(left=l, right=r) | And(left=l, right=r) | Or(left=l, right=r):
            return uses_division(l) or uses_division(r)
        case Membership(expr=e, choices=choices):
            return uses_division(e) or any(uses_division(c) for c in choices)
    raise TypeError(f"not an expression node: {node!r}")
