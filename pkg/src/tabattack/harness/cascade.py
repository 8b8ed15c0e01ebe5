"""Cascaded attack: cpgd, then capgd, then moeva, each only on prior failures.

Examples the model already misclassifies are marked successful up front and
never attacked. A stage's candidate is accepted when it flips the label and
passes the validity gate (constraints, budget, immutability); later stages
run only on examples still unsolved. Stages whose access requirements exceed
the available level are skipped rather than failed, so a query-only attacker
degrades to the evolutionary stage alone.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from tabattack.attacks.capgd import CapgdConfig, capgd
from tabattack.attacks.common import AttackOutcome, derive_seed, evaluate_success
from tabattack.attacks.cpgd import CpgdConfig, cpgd
from tabattack.attacks.moeva import MoevaConfig, evolve
from tabattack.constraints.sets import ConstraintSet, check_batch
from tabattack.data.scaling import Scaler
from tabattack.data.schema import Schema
from tabattack.exceptions import ConfigError
from tabattack.model.access import QUERY_PROBA, WHITEBOX, ModelAccess

STAGES = ("cpgd", "capgd", "moeva")
_STAGE_ACCESS = {"cpgd": WHITEBOX, "capgd": WHITEBOX, "moeva": QUERY_PROBA}

NATURAL = "natural"
NONE = "none"


@dataclass(frozen=True)
class CascadeConfig:
    cpgd: CpgdConfig
    capgd: CapgdConfig
    moeva: MoevaConfig
    stages: tuple[str, ...] = STAGES

    def __post_init__(self):
        if self.cpgd.epsilon != self.capgd.epsilon or self.cpgd.epsilon != self.moeva.epsilon:
            raise ConfigError("all cascade stages must share the same epsilon")
        if self.cpgd.enforce_constraints != self.capgd.enforce_constraints:
            raise ConfigError("cascade stages must agree on constraint enforcement")
        for s in self.stages:
            if s not in STAGES:
                raise ConfigError(f"unknown cascade stage {s!r}")

    @property
    def epsilon(self) -> float:
        return self.cpgd.epsilon

    def with_enforcement(self, enforce: bool) -> "CascadeConfig":
        return CascadeConfig(
            cpgd=CpgdConfig(
                epsilon=self.cpgd.epsilon,
                n_iter=self.cpgd.n_iter,
                m=self.cpgd.m,
                enforce_constraints=enforce,
            ),
            capgd=CapgdConfig(
                epsilon=self.capgd.epsilon,
                n_iter=self.capgd.n_iter,
                alpha=self.capgd.alpha,
                rho=self.capgd.rho,
                checkpoints=self.capgd.checkpoints,
                enforce_constraints=enforce,
            ),
            moeva=self.moeva,
            stages=self.stages,
        )


@dataclass
class CascadeResult:
    candidates: np.ndarray
    stage_of_success: list[str]
    stage_times: dict[str, float] = field(default_factory=dict)
    emitted: dict[str, list[tuple[int, np.ndarray]]] = field(default_factory=dict)
    outcomes: dict[str, dict[int, AttackOutcome]] = field(default_factory=dict)
    total_queries: int = 0
    total_gradient_calls: int = 0

    @property
    def success_mask(self) -> np.ndarray:
        return np.array([s != NONE for s in self.stage_of_success], dtype=bool)

    def stage_counts(self) -> dict[str, int]:
        counts = {stage: 0 for stage in (NATURAL, *STAGES, NONE)}
        for s in self.stage_of_success:
            counts[s] += 1
        return counts


def _run_stage_example(
    stage: str,
    i: int,
    x0: np.ndarray,
    y: int,
    access: ModelAccess,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    config: CascadeConfig,
    global_seed: int,
) -> AttackOutcome:
    # Fresh per-example wrapper: query/gradient attribution stays exact and
    # thread-independent even when examples run concurrently.
    example_access = ModelAccess(access.model, access.level)
    if stage == "cpgd":
        return cpgd(x0, int(y), example_access, cset, schema, scaler, config.cpgd)
    if stage == "capgd":
        return capgd(x0, int(y), example_access, cset, schema, scaler, config.capgd)
    rng = np.random.default_rng(derive_seed(global_seed, i, "moeva"))
    return evolve(x0, int(y), example_access, cset, schema, scaler, config.moeva, rng=rng)


def caa(
    X_scaled: np.ndarray,
    y: np.ndarray,
    access: ModelAccess,
    cset: ConstraintSet,
    schema: Schema,
    scaler: Scaler,
    config: CascadeConfig,
    global_seed: int = 0,
    threads: int = 1,
) -> CascadeResult:
    """Run the attack cascade over a batch of scaled examples.

    ``cset`` is the constraint knowledge available to the attacker; it drives
    both the per-stage guidance and the cascade's internal acceptance gate.
    """
    X_scaled = np.asarray(X_scaled, dtype=float)
    y = np.asarray(y, dtype=int)
    n = X_scaled.shape[0]
    candidates = X_scaled.copy()
    stage_of_success = [NONE] * n

    preds = np.argmax(access.model.forward_batch(X_scaled), axis=1) if n else np.empty(0, int)
    valid = check_batch(scaler.unscale(X_scaled), cset, schema) if n else np.empty(0, bool)
    success = (preds != y) & valid
    for i in np.flatnonzero(success):
        stage_of_success[i] = NATURAL

    result = CascadeResult(candidates=candidates, stage_of_success=stage_of_success)
    for stage in config.stages:
        result.stage_times[stage] = 0.0
        result.emitted[stage] = []
        result.outcomes[stage] = {}
        if not access.allows(_STAGE_ACCESS[stage]):
            continue
        pending = np.flatnonzero(~success)
        if pending.size == 0:
            continue
        started = time.perf_counter()

        def attack_one(i: int) -> tuple[int, AttackOutcome]:
            return i, _run_stage_example(
                stage, int(i), X_scaled[i], int(y[i]), access, cset, schema, scaler,
                config, global_seed,
            )

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                stage_outcomes = list(pool.map(attack_one, pending))
        else:
            stage_outcomes = [attack_one(i) for i in pending]
        result.stage_times[stage] = time.perf_counter() - started

        for i, outcome in stage_outcomes:
            result.outcomes[stage][i] = outcome
            result.emitted[stage].append((i, outcome.candidate))
            result.total_queries += outcome.queries
            result.total_gradient_calls += outcome.gradient_calls
            accepted = evaluate_success(
                X_scaled[i], outcome.candidate, int(y[i]), access.model, cset, schema,
                scaler, config.epsilon,
            )
            if accepted:
                candidates[i] = outcome.candidate
                success[i] = True
                stage_of_success[i] = stage
    return result
