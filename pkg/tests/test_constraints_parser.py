"""Parser behavior: examples, error positions, and round-trip stability."""

import numpy as np
import pytest

from tabattack.constraints.expr import (
    And,
    Binary,
    Compare,
    Constant,
    Feature,
    Membership,
    Or,
    OriginalValue,
    format_constraint,
)
from tabattack.constraints.parser import parse_constraints, parse_expression
from tabattack.constraints.sets import format_constraint_set
from tabattack.exceptions import ConstraintSyntaxError, UnknownFeatureError

from conftest import make_schema, random_constraint


@pytest.fixture
def accounts_schema():
    return make_schema(
        [
            ("open_acc", "discrete", True, 0.0, 50.0, None),
            ("total_acc", "discrete", True, 0.0, 80.0, None),
            ("rate", "continuous", True, 0.0, 1.0, None),
        ]
    )


def test_simple_comparison(accounts_schema):
    expr = parse_expression("F[open_acc] <= F[total_acc]", accounts_schema)
    assert expr == Compare("<=", Feature(0, "open_acc"), Feature(1, "total_acc"))


def test_empty_source_yields_empty_set(accounts_schema):
    cset = parse_constraints("", accounts_schema)
    assert cset.constraints == ()
    assert not cset.has_relations


def test_comments_and_blank_lines_skipped(accounts_schema):
    cset = parse_constraints("# header\n\n  # another\nF[open_acc] <= F[total_acc]\n", accounts_schema)
    assert len(cset.constraints) == 1
    assert cset.constraints[0].name == "c1"


def test_syntax_error_at_end_of_input(accounts_schema):
    with pytest.raises(ConstraintSyntaxError) as err:
        parse_constraints("F[open_acc] <=", accounts_schema)
    assert "end-of-input" in str(err.value)


def test_unknown_feature_reports_name_and_position(accounts_schema):
    with pytest.raises(UnknownFeatureError) as err:
        parse_constraints("F[open_acc] <= F[nope]", accounts_schema)
    assert err.value.feature_name == "nope"
    assert err.value.line == 1
    assert err.value.column > 1


def test_lexical_error(accounts_schema):
    with pytest.raises(ConstraintSyntaxError):
        parse_constraints("F[open_acc] <= $", accounts_schema)


def test_chained_comparison_rejected(accounts_schema):
    with pytest.raises(ConstraintSyntaxError) as err:
        parse_constraints("F[open_acc] <= F[total_acc] <= 10", accounts_schema)
    assert "chained" in str(err.value)


def test_bare_numeric_line_rejected(accounts_schema):
    with pytest.raises(ConstraintSyntaxError):
        parse_constraints("F[open_acc] + 1", accounts_schema)


def test_named_constraints_and_duplicates(accounts_schema):
    cset = parse_constraints(
        "ordering: F[open_acc] <= F[total_acc]\nF[rate] < 1",
        accounts_schema,
    )
    assert cset.names == ("ordering", "c1")
    from tabattack.exceptions import ConstraintLinkError

    with pytest.raises(ConstraintLinkError):
        parse_constraints(
            "dup: F[open_acc] <= 1\ndup: F[open_acc] <= 2", accounts_schema
        )


def test_membership_and_original_value(accounts_schema):
    expr = parse_expression("F[rate] in {0.1, 0.5, X0[rate]}", accounts_schema)
    assert isinstance(expr, Membership)
    assert expr.choices[2] == OriginalValue(2, "rate")


def test_precedence_and_over_or(accounts_schema):
    expr = parse_expression(
        "F[rate] < 1 or F[rate] > 0 and F[open_acc] <= 3", accounts_schema
    )
    assert isinstance(expr, Or)
    assert isinstance(expr.right, And)


def test_arithmetic_precedence(accounts_schema):
    expr = parse_expression("F[rate] = 1 + 2 * 3", accounts_schema)
    assert isinstance(expr, Compare)
    rhs = expr.right
    assert isinstance(rhs, Binary) and rhs.op == "+"
    assert rhs.right == Binary("*", Constant(2.0), Constant(3.0))


def test_unary_minus_folds_constants(accounts_schema):
    expr = parse_expression("F[rate] >= -0.5", accounts_schema)
    assert expr.right == Constant(-0.5)


def test_equality_synonyms(accounts_schema):
    a = parse_expression("F[rate] = 0.5", accounts_schema)
    b = parse_expression("F[rate] == 0.5", accounts_schema)
    assert a == b


def test_division_flagged(accounts_schema):
    cset = parse_constraints("F[rate] <= F[total_acc] / 4", accounts_schema)
    assert cset.constraints[0].uses_division
    cset2 = parse_constraints("F[rate] <= 1", accounts_schema)
    assert not cset2.constraints[0].uses_division


def test_round_trip_fixed_point_demo():
    from tabattack.demo import load_demo

    schema, cset = load_demo()
    printed = format_constraint_set(cset)
    reparsed = parse_constraints(printed, schema)
    assert tuple(c.expr for c in reparsed.constraints) == tuple(
        c.expr for c in cset.constraints
    )
    assert reparsed.names == cset.names
    assert format_constraint_set(reparsed) == printed


def test_round_trip_fixed_point_random_trees():
    schema = make_schema(
        [(f"f{i}", "continuous", True, -100.0, 100.0, None) for i in range(6)]
    )
    rng = np.random.default_rng(7)
    for _ in range(200):
        tree = random_constraint(rng, 6, 4)
        printed = format_constraint(tree)
        reparsed = parse_expression(printed, schema)
        assert reparsed == tree, printed
