"""The ten threat scenarios and the per-scenario evaluation driver.

Scenario ids pair a base letter (model/dataset access) with a variant digit:
variant 1 attackers know the relation constraints, variant 2 attackers keep
only boundary/type/mutability knowledge. Transfer scenarios build an attacker
dataset at the granted access level, train a surrogate of a different
architecture, attack it white-box, and transfer the candidates to the target.
The defender always validates candidates against the full constraint set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabattack.attacks.common import derive_seed
from tabattack.data.access import DEFAULT_SUBSET_FRACTION, DISTRIBUTION, FULL, SUBSET, sample_access
from tabattack.data.dataset import Dataset
from tabattack.data.scaling import Scaler
from tabattack.constraints.sets import ConstraintSet
from tabattack.exceptions import ConfigError
from tabattack.harness.cascade import STAGES, CascadeConfig, caa
from tabattack.harness.metrics import (
    EvaluationReport,
    ScenarioSeedResult,
    constraint_satisfaction_table,
    robust_accuracy,
)
from tabattack.model.access import NONE, QUERY_PROBA, WHITEBOX, ModelAccess
from tabattack.model.mlp import MlpModel
from tabattack.model.train import TrainConfig, train


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    domain_knowledge: bool
    model_access: str  # whitebox | query_proba | none
    dataset_access: str  # full | subset | distribution


SCENARIOS: dict[str, ScenarioSpec] = {
    "A1": ScenarioSpec("A1", True, WHITEBOX, FULL),
    "A2": ScenarioSpec("A2", False, WHITEBOX, FULL),
    "B1": ScenarioSpec("B1", True, QUERY_PROBA, FULL),
    "B2": ScenarioSpec("B2", False, QUERY_PROBA, FULL),
    "C1": ScenarioSpec("C1", True, NONE, FULL),
    "C2": ScenarioSpec("C2", False, NONE, FULL),
    "D1": ScenarioSpec("D1", True, NONE, SUBSET),
    "D2": ScenarioSpec("D2", False, NONE, SUBSET),
    "E1": ScenarioSpec("E1", True, NONE, DISTRIBUTION),
    "E2": ScenarioSpec("E2", False, NONE, DISTRIBUTION),
}


@dataclass(frozen=True)
class ScenarioRunConfig:
    cascade: CascadeConfig
    surrogate_hidden: tuple[int, ...] = (24, 24)
    surrogate_training: TrainConfig = field(default_factory=TrainConfig)
    subset_fraction: float = DEFAULT_SUBSET_FRACTION
    max_eval_examples: int | None = None
    threads: int = 1


def _eval_subset(eval_ds: Dataset, limit: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Attack launch points: the positive class of the evaluation set."""
    idx = np.flatnonzero(eval_ds.y == 1)
    if limit is not None:
        idx = idx[:limit]
    if idx.size == 0:
        raise ConfigError("evaluation set has no positive examples to attack")
    return eval_ds.X[idx], eval_ds.y[idx]


def _attacker_model_access(
    spec: ScenarioSpec,
    target: MlpModel,
    train_ds: Dataset,
    cfg: ScenarioRunConfig,
    seed: int,
) -> ModelAccess:
    if spec.model_access == WHITEBOX:
        return ModelAccess(target, WHITEBOX)
    if spec.model_access == QUERY_PROBA:
        return ModelAccess(target, QUERY_PROBA)
    attacker_data = sample_access(train_ds, spec.dataset_access, seed, cfg.subset_fraction)
    layer_sizes = (train_ds.schema.d, *cfg.surrogate_hidden, 2)
    surrogate_init = MlpModel.initialize(layer_sizes, derive_seed(seed, 0, "surrogate-init"))
    surrogate_cfg = TrainConfig(
        epochs=cfg.surrogate_training.epochs,
        batch_size=cfg.surrogate_training.batch_size,
        learning_rate=cfg.surrogate_training.learning_rate,
        weight_decay=cfg.surrogate_training.weight_decay,
        adversarial=cfg.surrogate_training.adversarial,
        adv_epsilon=cfg.surrogate_training.adv_epsilon,
        adv_steps=cfg.surrogate_training.adv_steps,
        seed=derive_seed(seed, 0, "surrogate-train"),
    )
    surrogate, _ = train(surrogate_init, attacker_data, surrogate_cfg)
    return ModelAccess(surrogate, WHITEBOX)


def run_scenario(
    spec: ScenarioSpec,
    target: MlpModel,
    train_ds: Dataset,
    eval_ds: Dataset,
    cset: ConstraintSet,
    cfg: ScenarioRunConfig,
    seeds: list[int],
    model_name: str = "target",
    attack_name: str = "caa",
    collector=None,
) -> EvaluationReport:
    """Evaluate one scenario over a list of seeds and aggregate the results.

    ``collector(seed, cascade_result, X_eval, y_eval)`` is invoked after each
    seed's cascade, giving callers access to per-example outcomes for logging
    and independent audits.
    """
    schema = train_ds.schema
    scaler = Scaler(schema)
    epsilon = cfg.cascade.epsilon
    cascade_cfg = cfg.cascade.with_enforcement(spec.domain_knowledge)
    attacker_cset = cset if spec.domain_knowledge else cset.without_relations()

    X_eval, y_eval = _eval_subset(eval_ds, cfg.max_eval_examples)
    X_scaled = scaler.scale(X_eval)

    per_seed: list[ScenarioSeedResult] = []
    for seed in seeds:
        access = _attacker_model_access(spec, target, train_ds, cfg, seed)
        result = caa(
            X_scaled,
            y_eval,
            access,
            attacker_cset,
            schema,
            scaler,
            cascade_cfg,
            global_seed=seed,
            threads=cfg.threads,
        )
        if collector is not None:
            collector(seed, result, X_eval, y_eval)
        clean_preds = np.argmax(target.forward_batch(X_scaled), axis=1)
        clean_acc = float(np.mean(clean_preds == y_eval))
        robust_acc = robust_accuracy(
            target, X_scaled, y_eval, result.candidates, cset, schema, scaler, epsilon
        )
        pairs = [
            (X_eval[i], scaler.unscale(cand))
            for stage in result.emitted
            for i, cand in result.emitted[stage]
        ]
        satisfaction = (
            constraint_satisfaction_table(pairs, cset) if pairs and cset.has_relations else {}
        )
        per_seed.append(
            ScenarioSeedResult(
                seed=seed,
                clean_accuracy=clean_acc,
                robust_accuracy=robust_acc,
                stage_counts=result.stage_counts(),
                satisfaction=satisfaction,
                stage_times=dict(result.stage_times),
                queries=result.total_queries,
                gradient_calls=result.total_gradient_calls,
                n_examples=int(y_eval.size),
            )
        )
    return EvaluationReport(
        scenario=spec.id,
        model_name=model_name,
        attack=attack_name,
        epsilon=epsilon,
        seeds=list(seeds),
        per_seed=per_seed,
    )


def stage_restricted_config(cascade: CascadeConfig, attack: str) -> CascadeConfig:
    """Cascade config running a single stage, used for standalone attacks."""
    if attack == "caa":
        return cascade
    if attack not in STAGES:
        raise ConfigError(f"unknown attack {attack!r}")
    return CascadeConfig(
        cpgd=cascade.cpgd, capgd=cascade.capgd, moeva=cascade.moeva, stages=(attack,)
    )


def required_access(attack: str) -> str:
    """Minimum model access an explicitly requested attack needs."""
    if attack in ("cpgd", "capgd"):
        return WHITEBOX
    if attack in ("moeva", "caa"):
        return QUERY_PROBA
    raise ConfigError(f"unknown attack {attack!r}")
