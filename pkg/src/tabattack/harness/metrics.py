"""Defender-side evaluation: robust accuracy, satisfaction rates, aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from tabattack.attacks.common import immutables_preserved, within_budget
from tabattack.constraints.penalty import constraint_penalty_batch
from tabattack.constraints.sets import ConstraintSet, check
from tabattack.data.scaling import Scaler
from tabattack.data.schema import Schema
from tabattack.exceptions import ConfigError
from tabattack.model.mlp import MlpModel


def candidate_is_valid(
    x0_scaled: np.ndarray,
    cand_scaled: np.ndarray,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    epsilon: float,
) -> bool:
    """Defender validity: constraints, budget, and immutability all hold."""
    if not within_budget(x0_scaled, cand_scaled, epsilon):
        return False
    if not immutables_preserved(x0_scaled, cand_scaled, schema):
        return False
    return check(
        scaler.unscale(cand_scaled), cset, schema, x0=scaler.unscale(x0_scaled)
    ).overall


def robust_accuracy(
    model: MlpModel,
    X_scaled: np.ndarray,
    y: np.ndarray,
    X_adv_scaled: np.ndarray,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    epsilon: float,
) -> float:
    """Accuracy after substituting valid in-budget candidates, reverting the rest.

    Invalid or over-budget candidates count as failed attacks: the clean
    example is evaluated instead. Naturally misclassified examples score as
    incorrect either way.
    """
    X_scaled = np.asarray(X_scaled, dtype=float)
    X_adv_scaled = np.asarray(X_adv_scaled, dtype=float)
    y = np.asarray(y, dtype=int)
    if X_adv_scaled.shape != X_scaled.shape:
        raise ConfigError("candidate matrix must align with the clean matrix")
    evaluated = X_scaled.copy()
    for i in range(X_scaled.shape[0]):
        if candidate_is_valid(X_scaled[i], X_adv_scaled[i], cset, schema, scaler, epsilon):
            evaluated[i] = X_adv_scaled[i]
    preds = np.argmax(model.forward_batch(evaluated), axis=1)
    return float(np.mean(preds == y))


def constraint_satisfaction_table(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    cset: ConstraintSet,
) -> dict[str, float]:
    """Per-constraint satisfaction rate over emitted (pre-revert) candidates.

    ``pairs`` holds (original, candidate) rows in original units; a candidate
    satisfies a constraint when its penalty is within the satisfaction
    tolerance.
    """
    if not pairs:
        raise ConfigError("satisfaction table needs at least one candidate")
    X0 = np.stack([p[0] for p in pairs])
    Xc = np.stack([p[1] for p in pairs])
    rates = {}
    for item in cset.constraints:
        pen = constraint_penalty_batch(item.expr, Xc, X0, cset.tau)
        rates[item.name] = float(np.mean(pen <= cset.satisfaction_tol))
    return rates


def mean_ci(values: list[float] | np.ndarray, level: float = 0.95) -> tuple[float, float]:
    """Mean and Student-t confidence half-width over per-seed values."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    sem = float(arr.std(ddof=1) / np.sqrt(arr.size))
    tcrit = float(stats.t.ppf(0.5 + level / 2.0, df=arr.size - 1))
    return mean, tcrit * sem


@dataclass
class ScenarioSeedResult:
    """Raw per-seed measurements inside one scenario run."""

    seed: int
    clean_accuracy: float
    robust_accuracy: float
    stage_counts: dict[str, int]
    satisfaction: dict[str, float]
    stage_times: dict[str, float]
    queries: int
    gradient_calls: int
    n_examples: int


@dataclass
class EvaluationReport:
    """Aggregated scenario results across seeds."""

    scenario: str
    model_name: str
    attack: str
    epsilon: float
    seeds: list[int]
    per_seed: list[ScenarioSeedResult]
    resolved_config: dict = field(default_factory=dict)

    @property
    def clean_accuracy(self) -> tuple[float, float]:
        return mean_ci([r.clean_accuracy for r in self.per_seed])

    @property
    def robust_accuracy(self) -> tuple[float, float]:
        return mean_ci([r.robust_accuracy for r in self.per_seed])

    def mean_satisfaction(self) -> dict[str, float]:
        names: list[str] = []
        for r in self.per_seed:
            for name in r.satisfaction:
                if name not in names:
                    names.append(name)
        return {
            name: float(np.mean([r.satisfaction[name] for r in self.per_seed if name in r.satisfaction]))
            for name in names
        }

    def mean_stage_counts(self) -> dict[str, float]:
        keys: list[str] = []
        for r in self.per_seed:
            for k in r.stage_counts:
                if k not in keys:
                    keys.append(k)
        return {k: float(np.mean([r.stage_counts.get(k, 0) for r in self.per_seed])) for k in keys}

    def total_time(self) -> float:
        return float(sum(sum(r.stage_times.values()) for r in self.per_seed))

    def to_json_dict(self) -> dict:
        """Deterministic payload: timing lives in a separate sidecar."""
        clean_mean, clean_ci = self.clean_accuracy
        robust_mean, robust_ci = self.robust_accuracy
        return {
            "scenario": self.scenario,
            "model": self.model_name,
            "attack": self.attack,
            "epsilon": self.epsilon,
            "seeds": list(self.seeds),
            "clean_accuracy": {"mean": clean_mean, "ci95": clean_ci},
            "robust_accuracy": {"mean": robust_mean, "ci95": robust_ci},
            "stage_counts": self.mean_stage_counts(),
            "constraint_satisfaction": self.mean_satisfaction(),
            "per_seed": [
                {
                    "seed": r.seed,
                    "clean_accuracy": r.clean_accuracy,
                    "robust_accuracy": r.robust_accuracy,
                    "stage_counts": r.stage_counts,
                    "constraint_satisfaction": r.satisfaction,
                    "queries": r.queries,
                    "gradient_calls": r.gradient_calls,
                    "n_examples": r.n_examples,
                }
                for r in self.per_seed
            ],
            "config": self.resolved_config,
        }

    def timing_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "model": self.model_name,
            "attack": self.attack,
            "per_seed": [
                {"seed": r.seed, "stage_times": r.stage_times} for r in self.per_seed
            ],
            "total_seconds": self.total_time(),
        }

    def csv_rows(self) -> list[dict]:
        return [
            {
                "scenario": self.scenario,
                "model": self.model_name,
                "attack": self.attack,
                "seed": r.seed,
                "epsilon": self.epsilon,
                "n_examples": r.n_examples,
                "clean_accuracy": r.clean_accuracy,
                "robust_accuracy": r.robust_accuracy,
                "queries": r.queries,
                "gradient_calls": r.gradient_calls,
            }
            for r in self.per_seed
        ]
