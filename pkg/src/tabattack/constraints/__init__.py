"""Constraint DSL: AST, parser, penalty compilation, satisfaction checks, repair."""

from tabattack.constraints.expr import (
    And,
    Binary,
    Compare,
    Constant,
    ConstraintExpr,
    Feature,
    Membership,
    NumericExpr,
    Or,
    OriginalValue,
    format_constraint,
    format_numeric,
)
from tabattack.constraints.parser import parse_constraints, parse_expression
from tabattack.constraints.penalty import (
    PenaltyReport,
    constraint_penalty_batch,
    numeric_value_batch,
    penalty,
    penalty_gradient,
    penalty_report,
    total_penalty_batch,
)
from tabattack.constraints.repair import repair
from tabattack.constraints.sets import (
    Assignment,
    ConstraintSet,
    NamedConstraint,
    ValidityReport,
    check,
    check_batch,
    format_constraint_set,
    link,
)

__all__ = [
    "And",
    "Assignment",
    "Binary",
    "Compare",
    "Constant",
    "ConstraintExpr",
    "ConstraintSet",
    "Feature",
    "Membership",
    "NamedConstraint",
    "NumericExpr",
    "Or",
    "OriginalValue",
    "PenaltyReport",
    "ValidityReport",
    "check",
    "check_batch",
    "constraint_penalty_batch",
    "format_constraint",
    "format_constraint_set",
    "format_numeric",
    "link",
    "numeric_value_batch",
    "parse_constraints",
    "parse_expression",
    "penalty",
    "penalty_gradient",
    "penalty_report",
    "repair",
    "total_penalty_batch",
]
