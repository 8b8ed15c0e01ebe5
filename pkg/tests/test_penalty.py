"""Penalty semantics: table rows, composition rules, and the boolean oracle."""

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
)
from tabattack.constraints.parser import parse_constraints
from tabattack.constraints.penalty import (
    constraint_penalty_batch,
    penalty,
    penalty_report,
    total_penalty_batch,
)
from tabattack.exceptions import ConstraintEvalError

from conftest import interpret_bool_oracle, make_schema, random_constraint

TAU = 1e-6

A = Feature(0, "a")
B = Feature(1, "b")


def test_le_row():
    # a <= b at a=5, b=3 gives max(0, 5-3) = 2
    expr = Compare("<=", A, B)
    assert penalty(np.array([5.0, 3.0]), expr, np.array([5.0, 3.0]), TAU) == 2.0
    assert penalty(np.array([1.0, 3.0]), expr, np.array([1.0, 3.0]), TAU) == 0.0


def test_membership_row():
    expr = Membership(A, (Constant(1.0), Constant(2.0), Constant(3.0)))
    x = np.array([2.4, 0.0])
    assert penalty(x, expr, x, TAU) == pytest.approx(0.4, abs=1e-12)


def test_or_takes_min():
    sat = Compare("<=", A, B)  # satisfied below
    unsat = Compare("<=", B, A)
    x = np.array([1.0, 4.0])
    expr = Or(unsat, sat)
    assert penalty(x, expr, x, TAU) == 0.0
    assert penalty(x, Or(unsat, unsat), x, TAU) == 3.0


def test_and_sums():
    unsat = Compare("<=", B, A)  # penalty 3 at x
    x = np.array([1.0, 4.0])
    assert penalty(x, And(unsat, unsat), x, TAU) == 6.0


def test_strict_and_equality_rows():
    x = np.array([2.0, 2.0])
    assert penalty(x, Compare("<", A, B), x, TAU) == pytest.approx(TAU)
    assert penalty(x, Compare("<=", A, B), x, TAU) == 0.0
    assert penalty(x, Compare("=", A, B), x, TAU) == 0.0
    # != needs a tau separation
    assert penalty(x, Compare("!=", A, B), x, TAU) == pytest.approx(TAU)
    y = np.array([2.0, 2.0 + 2 * TAU])
    assert penalty(y, Compare("!=", A, B), y, TAU) == 0.0


def test_swapped_operands():
    x = np.array([5.0, 3.0])
    assert penalty(x, Compare(">=", A, B), x, TAU) == 0.0
    assert penalty(x, Compare(">", B, A), x, TAU) == pytest.approx(2.0 + TAU)


def test_penalty_report_totals():
    schema = make_schema(
        [("a", "continuous", True, -10.0, 10.0, None), ("b", "continuous", True, -10.0, 10.0, None)]
    )
    cset = parse_constraints("first: F[a] <= F[b]\nsecond: F[a] = 1", schema)
    rep = penalty_report(np.array([5.0, 3.0]), cset, np.array([5.0, 3.0]))
    assert dict(rep.per_constraint) == {"first": 2.0, "second": 4.0}
    assert rep.total == 6.0
    batch = total_penalty_batch(np.array([[5.0, 3.0], [0.0, 1.0]]), cset, np.array([5.0, 3.0]))
    assert batch[0] == 6.0 and batch[1] == 1.0


def test_division_by_zero_is_hard_error():
    schema = make_schema(
        [("a", "continuous", True, -10.0, 10.0, None), ("b", "continuous", True, -10.0, 10.0, None)]
    )
    cset = parse_constraints("ratio: F[a] / F[b] <= 1", schema)
    with pytest.raises(ConstraintEvalError) as err:
        penalty_report(np.array([1.0, 0.0]), cset, np.array([1.0, 0.0]))
    assert "ratio" in str(err.value)


def test_penalty_nonnegative_and_composition_on_random_trees():
    rng = np.random.default_rng(3)
    for _ in range(300):
        left = random_constraint(rng, 4, 2)
        right = random_constraint(rng, 4, 2)
        x = rng.uniform(-10, 10, size=(8, 4))
        x0 = rng.uniform(-10, 10, size=(8, 4))
        pl = constraint_penalty_batch(left, x, x0, TAU)
        pr = constraint_penalty_batch(right, x, x0, TAU)
        assert np.all(pl >= 0) and np.all(pr >= 0)
        np.testing.assert_array_equal(
            constraint_penalty_batch(And(left, right), x, x0, TAU), pl + pr
        )
        np.testing.assert_array_equal(
            constraint_penalty_batch(Or(left, right), x, x0, TAU), np.minimum(pl, pr)
        )


def test_zero_penalty_iff_boolean_oracle():
    # Smaller inline version of the acceptance criterion, kept fast.
    rng = np.random.default_rng(11)
    for _ in range(200):
        tree = random_constraint(rng, 6, 4)
        x = rng.uniform(-10, 10, size=(50, 6))
        x0 = rng.uniform(-10, 10, size=(50, 6))
        pen = constraint_penalty_batch(tree, x, x0, TAU)
        sat = interpret_bool_oracle(tree, x, x0, TAU)
        np.testing.assert_array_equal(pen == 0.0, sat)
