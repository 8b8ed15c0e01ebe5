"""Cascade semantics, defender metrics, and scenario machinery."""

import numpy as np
import pytest

from tabattack.attacks.capgd import CapgdConfig
from tabattack.attacks.cpgd import CpgdConfig
from tabattack.attacks.moeva import MoevaConfig
from tabattack.constraints.parser import parse_constraints
from tabattack.data.dataset import Dataset
from tabattack.data.scaling import Scaler
from tabattack.exceptions import ConfigError
from tabattack.harness.cascade import CascadeConfig, caa
from tabattack.harness.metrics import (
    constraint_satisfaction_table,
    mean_ci,
    robust_accuracy,
)
from tabattack.harness.scenarios import (
    SCENARIOS,
    ScenarioRunConfig,
    required_access,
    run_scenario,
    stage_restricted_config,
)
from tabattack.model.access import ModelAccess
from tabattack.model.mlp import MlpModel

from conftest import make_schema


def small_cascade(epsilon=0.5, gens=8, pop=20, off=20):
    return CascadeConfig(
        cpgd=CpgdConfig(epsilon=epsilon),
        capgd=CapgdConfig(epsilon=epsilon),
        moeva=MoevaConfig(
            epsilon=epsilon, n_generations=gens, population_size=pop, n_offspring=off
        ),
    )


# cascade ---------------------------------------------------------------------------


def test_cascade_epsilon_mismatch_rejected():
    with pytest.raises(ConfigError):
        CascadeConfig(
            cpgd=CpgdConfig(epsilon=0.5),
            capgd=CapgdConfig(epsilon=0.3),
            moeva=MoevaConfig(epsilon=0.5),
        )


def test_all_naturally_misclassified_short_circuits(demo_bundle, demo_models):
    schema, cset, _, eval_ds = demo_bundle
    model, _ = demo_models
    scaler = Scaler(schema)
    X_scaled = scaler.scale(eval_ds.X)
    preds = np.argmax(model.forward_batch(X_scaled), axis=1)
    wrong = np.flatnonzero((preds != eval_ds.y))[:10]
    assert wrong.size > 0
    access = ModelAccess(model, "whitebox")
    res = caa(
        X_scaled[wrong], eval_ds.y[wrong], access, cset, schema, scaler,
        small_cascade(), global_seed=0,
    )
    assert all(s == "natural" for s in res.stage_of_success)
    assert all(len(v) == 0 for v in res.outcomes.values())
    np.testing.assert_array_equal(res.candidates, X_scaled[wrong])


def test_later_stages_skip_solved_examples(demo_bundle, demo_models):
    schema, cset, _, eval_ds = demo_bundle
    model, _ = demo_models
    scaler = Scaler(schema)
    pos = np.flatnonzero(eval_ds.y == 1)[:40]
    X = scaler.scale(eval_ds.X[pos])
    y = eval_ds.y[pos]
    res = caa(X, y, ModelAccess(model, "whitebox"), cset, schema, scaler,
              small_cascade(), global_seed=1)
    solved_by_cpgd = [i for i, s in enumerate(res.stage_of_success) if s == "cpgd"]
    assert solved_by_cpgd, "expected at least one cpgd success in this setup"
    for i in solved_by_cpgd:
        assert i not in res.outcomes["capgd"]
        assert i not in res.outcomes["moeva"]
    for i, s in enumerate(res.stage_of_success):
        if s == "natural":
            assert i not in res.outcomes["cpgd"]


def test_query_access_skips_gradient_stages(demo_bundle, demo_models):
    schema, cset, _, eval_ds = demo_bundle
    model, _ = demo_models
    scaler = Scaler(schema)
    pos = np.flatnonzero(eval_ds.y == 1)[:15]
    X = scaler.scale(eval_ds.X[pos])
    res = caa(X, eval_ds.y[pos], ModelAccess(model, "query_proba"), cset, schema,
              scaler, small_cascade(), global_seed=1)
    assert len(res.outcomes["cpgd"]) == 0
    assert len(res.outcomes["capgd"]) == 0
    counts = res.stage_counts()
    assert counts["cpgd"] == 0 and counts["capgd"] == 0


def test_accepted_candidates_pass_independent_interpreter(demo_bundle, demo_models):
    """End-to-end: every success-flagged candidate satisfies the constraints
    according to the independent boolean interpreter, not just the penalty path."""
    from conftest import interpret_bool_oracle

    schema, cset, _, eval_ds = demo_bundle
    model, _ = demo_models
    scaler = Scaler(schema)
    pos = np.flatnonzero(eval_ds.y == 1)[:40]
    X = scaler.scale(eval_ds.X[pos])
    y = eval_ds.y[pos]
    res = caa(X, y, ModelAccess(model, "whitebox"), cset, schema, scaler,
              small_cascade(), global_seed=2)
    n_checked = 0
    for i, stage in enumerate(res.stage_of_success):
        if stage in ("cpgd", "capgd", "moeva"):
            cand = scaler.unscale(res.candidates[i])[None, :]
            x0 = eval_ds.X[pos[i]][None, :]
            for item in cset.constraints:
                # strict relations hold within satisfaction_tol rather than
                # exactly; re-check with penalties for those
                from tabattack.constraints.penalty import constraint_penalty_batch

                pen = constraint_penalty_batch(item.expr, cand, x0, cset.tau)[0]
                sat = bool(interpret_bool_oracle(item.expr, cand, x0, cset.tau)[0])
                assert sat == (pen == 0.0)
                assert pen <= cset.satisfaction_tol
            n_checked += 1
    assert n_checked > 0


# robust accuracy ----------------------------------------------------------------


@pytest.fixture
def toy_model_setup():
    schema = make_schema(
        [("u", "continuous", True, 0.0, 1.0, None), ("v", "continuous", True, 0.0, 1.0, None)]
    )
    cset = parse_constraints("cap: F[u] <= 0.8", schema)
    scaler = Scaler(schema)
    model = MlpModel.zeros((2, 2))
    model.weights[0] = np.array([[0.0, 0.0], [8.0, -8.0]])  # class 1 iff u > v
    return schema, cset, scaler, model


def test_robust_accuracy_hand_case(toy_model_setup):
    schema, cset, scaler, model = toy_model_setup
    # 4 examples, label 1 (u > v for correct classification)
    X = np.array([[0.7, 0.2], [0.6, 0.1], [0.2, 0.6], [0.5, 0.3]])
    y = np.array([1, 1, 1, 1])
    X_adv = X.copy()
    X_adv[0] = [0.35, 0.6]  # valid in-budget flip -> incorrect
    X_adv[1] = [0.95, 0.1]  # violates cap -> reverted, stays correct
    # example 2 naturally misclassified -> incorrect either way
    X_adv[3] = [0.5, 0.9]   # flips but distance 0.6 > eps -> reverted, correct
    ra = robust_accuracy(model, X, y, X_adv, cset, schema, scaler, epsilon=0.55)
    # outcomes: flipped, reverted-correct, natural-wrong, reverted-correct
    assert ra == pytest.approx(2.0 / 4.0)


def test_robust_accuracy_full_revert_equals_clean(toy_model_setup):
    schema, cset, scaler, model = toy_model_setup
    X = np.array([[0.7, 0.2], [0.2, 0.6], [0.6, 0.1]])
    y = np.array([1, 1, 1])
    X_adv = np.full_like(X, 0.95)  # all violate the cap -> all reverted
    ra = robust_accuracy(model, X, y, X_adv, cset, schema, scaler, epsilon=10.0)
    preds = np.argmax(model.forward_batch(X), axis=1)
    assert ra == pytest.approx(float(np.mean(preds == y)))


def test_robust_accuracy_all_valid_flips(toy_model_setup):
    schema, cset, scaler, model = toy_model_setup
    X = np.array([[0.7, 0.2], [0.6, 0.1]])
    y = np.array([1, 1])
    X_adv = np.array([[0.2, 0.7], [0.1, 0.6]])
    assert robust_accuracy(model, X, y, X_adv, cset, schema, scaler, epsilon=1.0) == 0.0


def test_robust_never_exceeds_clean(demo_bundle, demo_models):
    schema, cset, _, eval_ds = demo_bundle
    model, _ = demo_models
    scaler = Scaler(schema)
    pos = np.flatnonzero(eval_ds.y == 1)[:30]
    X = scaler.scale(eval_ds.X[pos])
    y = eval_ds.y[pos]
    res = caa(X, y, ModelAccess(model, "whitebox"), cset, schema, scaler,
              small_cascade(), global_seed=3)
    ra = robust_accuracy(model, X, y, res.candidates, cset, schema, scaler, 0.5)
    clean = float(np.mean(np.argmax(model.forward_batch(X), axis=1) == y))
    assert ra <= clean


# satisfaction table ------------------------------------------------------------


def test_satisfaction_table_cases(toy_model_setup):
    schema, _, _, _ = toy_model_setup
    cset = parse_constraints("cap: F[u] <= 0.8\nfloor: F[v] >= 0.1", schema)
    x0 = np.array([0.5, 0.5])
    pairs = [
        (x0, np.array([0.4, 0.2])),  # both satisfied
        (x0, np.array([0.9, 0.2])),  # violates cap only
        (x0, np.array([0.4, 0.0])),  # violates floor only
    ]
    rates = constraint_satisfaction_table(pairs, cset)
    assert rates["cap"] == pytest.approx(2.0 / 3.0)
    assert rates["floor"] == pytest.approx(2.0 / 3.0)
    only = constraint_satisfaction_table([pairs[1]], cset)
    assert only["cap"] == 0.0 and only["floor"] == 1.0


def test_mean_ci_basics():
    mean, ci = mean_ci([0.5])
    assert mean == 0.5 and ci == 0.0
    mean, ci = mean_ci([0.4, 0.6])
    assert mean == pytest.approx(0.5)
    assert ci > 0


# scenarios -----------------------------------------------------------------------


def test_scenario_table_fidelity():
    expected = {
        "A1": (True, "whitebox", "full"),
        "A2": (False, "whitebox", "full"),
        "B1": (True, "query_proba", "full"),
        "B2": (False, "query_proba", "full"),
        "C1": (True, "none", "full"),
        "C2": (False, "none", "full"),
        "D1": (True, "none", "subset"),
        "D2": (False, "none", "subset"),
        "E1": (True, "none", "distribution"),
        "E2": (False, "none", "distribution"),
    }
    assert set(SCENARIOS) == set(expected)
    for sid, (domain, model_access, data_access) in expected.items():
        spec = SCENARIOS[sid]
        assert spec.domain_knowledge == domain
        assert spec.model_access == model_access
        assert spec.dataset_access == data_access


def test_required_access_guard():
    assert required_access("cpgd") == "whitebox"
    assert required_access("moeva") == "query_proba"
    with pytest.raises(ConfigError):
        required_access("nope")


def test_stage_restriction():
    cfg = stage_restricted_config(small_cascade(), "moeva")
    assert cfg.stages == ("moeva",)
    assert stage_restricted_config(small_cascade(), "caa").stages == ("cpgd", "capgd", "moeva")


def test_b_scenario_runs_moeva_only(demo_bundle, demo_models):
    schema, cset, train_ds, eval_ds = demo_bundle
    model, _ = demo_models
    cfg = ScenarioRunConfig(cascade=small_cascade(), max_eval_examples=12)
    rep = run_scenario(SCENARIOS["B1"], model, train_ds, eval_ds, cset, cfg, seeds=[1])
    counts = rep.per_seed[0].stage_counts
    assert counts["cpgd"] == 0 and counts["capgd"] == 0
    budget = 20 + 8 * 20
    assert rep.per_seed[0].queries <= budget * 12


def test_degenerate_transfer_equals_whitebox(demo_bundle, demo_models):
    """C1 with the surrogate forced to the target weights must equal A1."""
    schema, cset, train_ds, eval_ds = demo_bundle
    model, _ = demo_models
    cfg = ScenarioRunConfig(cascade=small_cascade(), max_eval_examples=15)

    rep_a1 = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg, seeds=[1])

    import tabattack.harness.scenarios as scen

    original = scen._attacker_model_access
    try:
        scen._attacker_model_access = lambda spec, target, ds, c, seed: ModelAccess(
            target, "whitebox"
        )
        rep_c1 = run_scenario(SCENARIOS["C1"], model, train_ds, eval_ds, cset, cfg, seeds=[1])
    finally:
        scen._attacker_model_access = original
    assert rep_c1.per_seed[0].robust_accuracy == rep_a1.per_seed[0].robust_accuracy
    assert rep_c1.per_seed[0].stage_counts == rep_a1.per_seed[0].stage_counts


def test_subset_scenario_trains_on_fraction(demo_bundle, demo_models):
    from tabattack.data.access import sample_access

    _, _, train_ds, _ = demo_bundle
    sub = sample_access(train_ds, "subset", seed=1, fraction=0.10)
    assert sub.n == 50
    assert np.sum(sub.y == 1) == 25


def test_variant2_emits_relation_violations(equality_bundle):
    schema, cset, train_ds, eval_ds, model = equality_bundle
    cfg = ScenarioRunConfig(
        cascade=small_cascade(gens=5, pop=15, off=15), max_eval_examples=20
    )
    rep1 = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg, seeds=[1])
    rep2 = run_scenario(SCENARIOS["A2"], model, train_ds, eval_ds, cset, cfg, seeds=[1])
    assert rep1.per_seed[0].satisfaction["total_def"] == 1.0
    assert rep2.per_seed[0].satisfaction["total_def"] < 1.0
    assert rep2.per_seed[0].robust_accuracy >= rep1.per_seed[0].robust_accuracy


def test_report_determinism(demo_bundle, demo_models):
    schema, cset, train_ds, eval_ds = demo_bundle
    model, _ = demo_models
    cfg = ScenarioRunConfig(cascade=small_cascade(), max_eval_examples=10)
    a = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg, seeds=[1, 2])
    b = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg, seeds=[1, 2])
    assert a.to_json_dict() == b.to_json_dict()


def test_threads_do_not_change_results(demo_bundle, demo_models):
    schema, cset, train_ds, eval_ds = demo_bundle
    model, _ = demo_models
    cfg1 = ScenarioRunConfig(cascade=small_cascade(), max_eval_examples=10, threads=1)
    cfg4 = ScenarioRunConfig(cascade=small_cascade(), max_eval_examples=10, threads=4)
    a = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg1, seeds=[1])
    b = run_scenario(SCENARIOS["A1"], model, train_ds, eval_ds, cset, cfg4, seeds=[1])
    assert a.to_json_dict() == b.to_json_dict()
