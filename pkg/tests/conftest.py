"""Shared fixtures and independent test oracles.

The oracles here deliberately re-implement semantics walked by the library
(boolean constraint interpretation, numeric evaluation, finite differences,
pairwise dominance) so that library results are checked against a second,
separately written path.
"""

from __future__ import annotations

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
)
from tabattack.data.schema import FeatureSpec, Schema
from tabattack.data.scaling import Scaler
from tabattack.data.synthetic import GeneratorConfig, generate_synthetic
from tabattack.demo import (
    DEMO_ADV_EPSILON,
    DEMO_ADV_STEPS,
    DEMO_LABEL_WEIGHTS,
    DEMO_NOISE_STD,
    DEMO_TRAIN_EPOCHS,
    DEMO_WEIGHT_DECAY,
    load_demo,
    load_equality_gap,
)
from tabattack.model.mlp import MlpModel
from tabattack.model.train import TrainConfig, train


# independent numeric/boolean interpreter -------------------------------------


def eval_numeric_oracle(expr, x, x0):
    """Independent recursive evaluation of a numeric expression (row-wise)."""
    if isinstance(expr, Constant):
        return np.full(x.shape[0], expr.value)
    if isinstance(expr, Feature):
        return x[:, expr.index]
    if isinstance(expr, OriginalValue):
        return np.broadcast_to(x0[:, expr.index], (x.shape[0],))
    assert isinstance(expr, Binary)
    l = eval_numeric_oracle(expr.left, x, x0)
    r = eval_numeric_oracle(expr.right, x, x0)
    if expr.op == "+":
        return l + r
    if expr.op == "-":
        return l - r
    if expr.op == "*":
        return l * r
    return l / r


def interpret_bool_oracle(expr, x, x0, tau):
    """Relational semantics with the tau margin for strict operators."""
    if isinstance(expr, And):
        return interpret_bool_oracle(expr.left, x, x0, tau) & interpret_bool_oracle(
            expr.right, x, x0, tau
        )
    if isinstance(expr, Or):
        return interpret_bool_oracle(expr.left, x, x0, tau) | interpret_bool_oracle(
            expr.right, x, x0, tau
        )
    if isinstance(expr, Compare):
        l = eval_numeric_oracle(expr.left, x, x0)
        r = eval_numeric_oracle(expr.right, x, x0)
        if expr.op == "<=":
            return l - r <= 0.0
        if expr.op == "<":
            return l - r + tau <= 0.0
        if expr.op == "=":
            return l == r
        if expr.op == "!=":
            return np.abs(l - r) >= tau
        if expr.op == ">=":
            return r - l <= 0.0
        return r - l + tau <= 0.0  # >
    assert isinstance(expr, Membership)
    v = eval_numeric_oracle(expr.expr, x, x0)
    hit = np.zeros(x.shape[0], dtype=bool)
    for c in expr.choices:
        hit |= v == eval_numeric_oracle(c, x, x0)
    return hit


# random constraint-tree generator ---------------------------------------------


def random_numeric(rng: np.random.Generator, n_features: int, depth: int):
    if depth == 0 or rng.random() < 0.35:
        kind = rng.random()
        if kind < 0.35:
            return Constant(float(np.round(rng.uniform(-5, 5), 3)))
        if kind < 0.85:
            i = int(rng.integers(n_features))
            return Feature(i, f"f{i}")
        i = int(rng.integers(n_features))
        return OriginalValue(i, f"f{i}")
    op = ["+", "-", "*", "/"][int(rng.integers(4))]
    left = random_numeric(rng, n_features, depth - 1)
    if op == "/":
        # keep denominators constant and away from zero so random evaluation
        # never divides by zero
        right = Constant(float(np.round(rng.uniform(0.5, 4.0), 3)) * (1 if rng.random() < 0.5 else -1))
    else:
        right = random_numeric(rng, n_features, depth - 1)
    return Binary(op, left, right)


def random_constraint(rng: np.random.Generator, n_features: int, depth: int):
    if depth == 0 or rng.random() < 0.45:
        if rng.random() < 0.2:
            expr = random_numeric(rng, n_features, max(depth - 1, 0))
            k = int(rng.integers(1, 4))
            choices = tuple(random_numeric(rng, n_features, 0) for _ in range(k))
            return Membership(expr, choices)
        op = ["<", "<=", "=", "!=", ">=", ">"][int(rng.integers(6))]
        return Compare(
            op,
            random_numeric(rng, n_features, max(depth - 1, 0)),
            random_numeric(rng, n_features, max(depth - 1, 0)),
        )
    node = And if rng.random() < 0.5 else Or
    return node(
        random_constraint(rng, n_features, depth - 1),
        random_constraint(rng, n_features, depth - 1),
    )


# finite differences -------------------------------------------------------------


def central_difference(fn, x: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad


# pairwise dominance oracle -------------------------------------------------------


def dominance_ranks_oracle(F: np.ndarray) -> np.ndarray:
    def dominates(a, b):
        return bool(np.all(a <= b) and np.any(a < b))

    n = F.shape[0]
    ranks = np.full(n, -1)
    assigned = np.zeros(n, dtype=bool)
    front = 0
    while not assigned.all():
        current = []
        for i in range(n):
            if assigned[i]:
                continue
            if not any(
                dominates(F[j], F[i]) for j in range(n) if j != i and not assigned[j]
            ):
                current.append(i)
        for i in current:
            ranks[i] = front
            assigned[i] = True
        front += 1
    return ranks


# small schemas -----------------------------------------------------------------


def make_schema(specs: list[tuple], target: str = "label") -> Schema:
    features = tuple(
        FeatureSpec(name=n, ftype=t, mutable=m, lower=lo, upper=hi, levels=lv)
        for (n, t, m, lo, hi, lv) in specs
    )
    return Schema(features=features, target_name=target)


@pytest.fixture
def pair_schema() -> Schema:
    return make_schema(
        [
            ("a", "continuous", True, -100.0, 100.0, None),
            ("b", "continuous", True, -100.0, 100.0, None),
        ]
    )


@pytest.fixture
def mixed_schema() -> Schema:
    return make_schema(
        [
            ("cont", "continuous", True, 0.0, 10.0, None),
            ("disc", "discrete", True, 0.0, 20.0, None),
            ("cat", "categorical", True, 0.0, 3.0, (0.0, 1.0, 3.0)),
            ("frozen", "continuous", False, -5.0, 5.0, None),
        ]
    )


# shared demo artifacts (session-scoped: several suites reuse them) ---------------


@pytest.fixture(scope="session")
def demo_bundle():
    schema, cset = load_demo()
    gen = GeneratorConfig(
        schema=schema,
        constraint_set=cset,
        n_rows=500,
        noise_std=DEMO_NOISE_STD,
        label_weights=DEMO_LABEL_WEIGHTS,
    )
    train_ds = generate_synthetic(gen, 11)
    eval_gen = GeneratorConfig(
        schema=schema,
        constraint_set=cset,
        n_rows=500,
        noise_std=DEMO_NOISE_STD,
        label_weights=DEMO_LABEL_WEIGHTS,
    )
    eval_ds = generate_synthetic(eval_gen, 12)
    return schema, cset, train_ds, eval_ds


@pytest.fixture(scope="session")
def demo_models(demo_bundle):
    schema, _, train_ds, _ = demo_bundle
    init = MlpModel.initialize((schema.d, 32, 32, 2), 0)
    standard, _ = train(
        init,
        train_ds,
        TrainConfig(epochs=DEMO_TRAIN_EPOCHS, weight_decay=DEMO_WEIGHT_DECAY, seed=0),
    )
    robust, _ = train(
        init,
        train_ds,
        TrainConfig(
            epochs=DEMO_TRAIN_EPOCHS,
            weight_decay=DEMO_WEIGHT_DECAY,
            seed=0,
            adversarial=True,
            adv_epsilon=DEMO_ADV_EPSILON,
            adv_steps=DEMO_ADV_STEPS,
        ),
    )
    return standard, robust


@pytest.fixture(scope="session")
def equality_bundle():
    schema, cset = load_equality_gap()
    gen = GeneratorConfig(
        schema=schema,
        constraint_set=cset,
        n_rows=400,
        noise_std=0.15,
        label_weights=(0.9, 0.7, -1.1, -0.6),
    )
    train_ds = generate_synthetic(gen, 21)
    eval_gen = GeneratorConfig(
        schema=schema,
        constraint_set=cset,
        n_rows=160,
        noise_std=0.15,
        label_weights=(0.9, 0.7, -1.1, -0.6),
    )
    eval_ds = generate_synthetic(eval_gen, 22)
    model, _ = train(
        MlpModel.initialize((schema.d, 24, 24, 2), 0),
        train_ds,
        TrainConfig(epochs=40, seed=0),
    )
    return schema, cset, train_ds, eval_ds, model
