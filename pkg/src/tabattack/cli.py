"""Command-line interface: train models, run attack scenarios, validate files.

Exit codes: 0 on success, 1 when the independent validity audit fails, 2 on
configuration errors. All commands are deterministic given their config and
seeds; wall-clock timings are written to a separate sidecar so the main
report files are byte-identical across repeated runs and thread counts.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from tabattack.constraints.parser import parse_constraints
from tabattack.constraints.sets import ConstraintSet, check as check_point
from tabattack.data.dataset import Dataset, load_dataset
from tabattack.data.scaling import Scaler
from tabattack.data.schema import Schema, load_schema
from tabattack.data.synthetic import GeneratorConfig, generate_synthetic
from tabattack.exceptions import ConfigError, TabAttackError
from tabattack.attacks.capgd import CapgdConfig
from tabattack.attacks.cpgd import CpgdConfig
from tabattack.attacks.moeva import MoevaConfig
from tabattack.harness.cascade import STAGES, CascadeConfig
from tabattack.harness.metrics import EvaluationReport, candidate_is_valid
from tabattack.harness.scenarios import (
    SCENARIOS,
    ScenarioRunConfig,
    required_access,
    run_scenario,
    stage_restricted_config,
)
from tabattack.model.access import _ORDER as ACCESS_ORDER
from tabattack.model.mlp import MlpModel
from tabattack.model.train import TrainConfig, train

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONFIG = 2


# config resolution -----------------------------------------------------------


def _resolve(base: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def load_run_config(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return raw, path.parent


class RunContext:
    """Everything a run needs, resolved from one config dict."""

    def __init__(self, raw: dict, base_dir: Path):
        self.raw = raw
        self.base_dir = base_dir
        schema_rel = raw.get("schema")
        if not schema_rel:
            raise ConfigError("config is missing 'schema'")
        schema_path = _resolve(base_dir, schema_rel)
        self.schema: Schema = load_schema(schema_path)
        constraints_rel = raw.get("constraints") or self.schema.constraints_path
        if constraints_rel:
            cpath = _resolve(base_dir, constraints_rel)
            if not cpath.exists():
                raise ConfigError(f"constraints file not found: {cpath}")
            self.cset: ConstraintSet = parse_constraints(
                cpath.read_text(encoding="utf-8"), self.schema
            )
        else:
            self.cset = parse_constraints("", self.schema)
        self.train_ds, self.eval_ds = self._build_datasets(raw.get("dataset", {}))
        self.scaler = Scaler(self.schema)

    def _build_datasets(self, spec: dict) -> tuple[Dataset, Dataset]:
        if "generator" in spec and spec["generator"] is not None:
            g = spec["generator"]
            weights = g.get("label_weights")
            base = GeneratorConfig(
                schema=self.schema,
                constraint_set=self.cset,
                n_rows=int(g.get("n_rows", 500)),
                positive_fraction=float(g.get("positive_fraction", 0.5)),
                noise_std=float(g.get("noise_std", 0.1)),
                label_seed=int(g.get("label_seed", 0)),
                label_weights=tuple(float(w) for w in weights) if weights else None,
            )
            train_ds = generate_synthetic(base, int(g.get("train_seed", 11)))
            eval_cfg = GeneratorConfig(
                schema=self.schema,
                constraint_set=self.cset,
                n_rows=int(g.get("eval_rows", base.n_rows)),
                positive_fraction=base.positive_fraction,
                noise_std=base.noise_std,
                label_seed=base.label_seed,
                label_weights=base.label_weights,
            )
            eval_ds = generate_synthetic(eval_cfg, int(g.get("eval_seed", 12)))
            return train_ds, eval_ds
        if "csv" in spec and spec["csv"] is not None:
            train_ds = load_dataset(
                _resolve(self.base_dir, spec["csv"]), schema=self.schema, constraint_set=self.cset
            )
            if not spec.get("eval_csv"):
                raise ConfigError("CSV datasets need an 'eval_csv' for attack launch points")
            eval_ds = load_dataset(
                _resolve(self.base_dir, spec["eval_csv"]),
                schema=self.schema,
                constraint_set=self.cset,
            )
            if spec.get("reserved_csv"):
                train_ds.reserved = load_dataset(
                    _resolve(self.base_dir, spec["reserved_csv"]),
                    schema=self.schema,
                    constraint_set=self.cset,
                )
            return train_ds, eval_ds
        raise ConfigError("config 'dataset' needs either a 'generator' block or a 'csv' path")

    # models ------------------------------------------------------------------

    def train_config(self, adversarial: bool) -> TrainConfig:
        t = self.raw.get("training", {})
        adv = t.get("adversarial") if adversarial else None
        if adversarial and adv is None:
            raise ConfigError("config has no 'training.adversarial' block")
        return TrainConfig(
            epochs=int(t.get("epochs", 40)),
            batch_size=int(t.get("batch_size", 32)),
            learning_rate=float(t.get("learning_rate", 0.1)),
            weight_decay=float(t.get("weight_decay", 0.0)),
            adversarial=adversarial,
            adv_epsilon=float(adv["adv_epsilon"]) if adversarial else None,
            adv_steps=int(adv["adv_steps"]) if adversarial else None,
            seed=int(t.get("seed", 0)),
        )

    def model_init(self) -> MlpModel:
        m = self.raw.get("model", {})
        hidden = tuple(int(h) for h in m.get("hidden", (32, 32)))
        return MlpModel.initialize(
            (self.schema.d, *hidden, 2), int(m.get("init_seed", 0))
        )

    def target_model(self, which: str) -> MlpModel:
        m = self.raw.get("model", {})
        if which not in ("standard", "robust"):
            path = _resolve(self.base_dir, which)
            if not path.exists():
                raise ConfigError(f"model file not found: {path}")
            return MlpModel.load(path)
        if which == "standard" and m.get("path"):
            return MlpModel.load(_resolve(self.base_dir, m["path"]))
        if which == "robust" and m.get("robust_path"):
            return MlpModel.load(_resolve(self.base_dir, m["robust_path"]))
        model, _ = train(self.model_init(), self.train_ds, self.train_config(which == "robust"))
        return model

    # attack configs ------------------------------------------------------------

    def cascade_config(self, epsilon_override: float | None = None) -> CascadeConfig:
        a = self.raw.get("attacks", {})
        epsilon = float(epsilon_override if epsilon_override is not None else a.get("epsilon", 0.5))
        if epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        cp = a.get("cpgd", {})
        ca = a.get("capgd", {})
        mo = a.get("moeva", {})
        return CascadeConfig(
            cpgd=CpgdConfig(
                epsilon=epsilon, n_iter=int(cp.get("n_iter", 10)), m=int(cp.get("m", 7))
            ),
            capgd=CapgdConfig(
                epsilon=epsilon,
                n_iter=int(ca.get("n_iter", 10)),
                alpha=float(ca.get("alpha", 0.75)),
                rho=float(ca.get("rho", 0.75)),
            ),
            moeva=MoevaConfig(
                epsilon=epsilon,
                n_generations=int(mo.get("n_generations", 100)),
                population_size=int(mo.get("population_size", 200)),
                n_offspring=int(mo.get("n_offspring", 100)),
                crossover_rate=float(mo.get("crossover_rate", 0.9)),
                mutation_rate=float(mo.get("mutation_rate", 0.2)),
            ),
        )

    def scenario_run_config(self, cascade: CascadeConfig, threads: int) -> ScenarioRunConfig:
        s = self.raw.get("surrogate", {})
        st = s.get("training", {})
        surrogate_training = TrainConfig(
            epochs=int(st.get("epochs", 30)),
            batch_size=int(st.get("batch_size", 32)),
            learning_rate=float(st.get("learning_rate", 0.1)),
            weight_decay=float(st.get("weight_decay", 0.0)),
            seed=int(st.get("seed", 0)),
        )
        max_eval = self.raw.get("max_eval_examples")
        return ScenarioRunConfig(
            cascade=cascade,
            surrogate_hidden=tuple(int(h) for h in s.get("hidden", (24, 24))),
            surrogate_training=surrogate_training,
            subset_fraction=float(self.raw.get("subset_fraction", 0.10)),
            max_eval_examples=int(max_eval) if max_eval is not None else None,
            threads=threads,
        )

    def resolved_summary(self) -> dict:
        out = json.loads(json.dumps(self.raw, sort_keys=True))
        out["schema_resolved"] = str(_resolve(self.base_dir, self.raw["schema"]))
        return out


# commands ---------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    raw, base = load_run_config(args.config)
    ctx = RunContext(raw, base)
    out_dir = Path(args.out) if args.out else Path(raw.get("output_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    report: dict = {"config": ctx.resolved_summary(), "models": {}}
    standard, history = train(ctx.model_init(), ctx.train_ds, ctx.train_config(False))
    standard.save(out_dir / "model_standard.json")
    report["models"]["standard"] = {
        "file": "model_standard.json",
        "train_losses": history.train_losses,
        "val_aucs": history.val_aucs,
        "best_epoch": history.best_epoch,
    }
    if raw.get("training", {}).get("adversarial"):
        robust, robust_history = train(ctx.model_init(), ctx.train_ds, ctx.train_config(True))
        robust.save(out_dir / "model_robust.json")
        report["models"]["robust"] = {
            "file": "model_robust.json",
            "train_losses": robust_history.train_losses,
            "val_aucs": robust_history.val_aucs,
            "best_epoch": robust_history.best_epoch,
        }
    with open(out_dir / "training_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote {len(report['models'])} model file(s) to {out_dir}")
    return EXIT_OK


def _outcome_rows(
    scenario_id: str,
    model_name: str,
    attack: str,
    seed: int,
    result,
    X_eval: np.ndarray,
    y_eval: np.ndarray,
    scaler: Scaler,
    names: tuple[str, ...],
) -> list[dict]:
    rows = []
    for stage in result.emitted:
        for i, cand in result.emitted[stage]:
            cand_orig = scaler.unscale(cand)
            row = {
                "scenario": scenario_id,
                "model": model_name,
                "attack": attack,
                "seed": seed,
                "stage": stage,
                "example_index": int(i),
                "label": int(y_eval[i]),
                "accepted": int(result.stage_of_success[i] == stage),
                "success_stage": result.stage_of_success[i],
            }
            for j, name in enumerate(names):
                row[f"orig__{name}"] = repr(float(X_eval[i, j]))
                row[f"cand__{name}"] = repr(float(cand_orig[j]))
            rows.append(row)
    return rows


def cmd_attack(args: argparse.Namespace) -> int:
    raw, base = load_run_config(args.config)
    ctx = RunContext(raw, base)
    out_dir = Path(args.out) if args.out else Path(raw.get("output_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    scenario_ids = (
        [s.strip().upper() for s in args.scenario.split(",")]
        if args.scenario
        else [str(s).upper() for s in raw.get("scenarios", ["A1"])]
    )
    for sid in scenario_ids:
        if sid not in SCENARIOS:
            raise ConfigError(f"unknown scenario id {sid!r}")
    attack = args.attack or raw.get("attack", "caa")
    if attack not in (*STAGES, "caa"):
        raise ConfigError(f"unknown attack {attack!r}")
    for sid in scenario_ids:
        spec = SCENARIOS[sid]
        if attack != "caa" and spec.model_access != "none":
            if ACCESS_ORDER[spec.model_access] < ACCESS_ORDER[required_access(attack)]:
                raise ConfigError(
                    f"attack {attack!r} needs {required_access(attack)} access but scenario "
                    f"{sid} grants only {spec.model_access}"
                )
    seeds = (
        [int(s) for s in args.seeds.split(",")]
        if args.seeds
        else [int(s) for s in raw.get("seeds", [1])]
    )
    cascade = stage_restricted_config(
        ctx.cascade_config(args.epsilon), attack
    )
    run_cfg = ctx.scenario_run_config(cascade, args.threads)
    target = ctx.target_model(args.model)
    model_name = args.model

    reports: list[EvaluationReport] = []
    outcome_rows: list[dict] = []
    audit_failures: list[str] = []

    for sid in scenario_ids:
        spec = SCENARIOS[sid]
        gate_cset = ctx.cset if spec.domain_knowledge else ctx.cset.without_relations()

        def collect(seed: int, result, X_eval: np.ndarray, y_eval: np.ndarray) -> None:
            outcome_rows.extend(
                _outcome_rows(
                    sid, model_name, attack, seed, result, X_eval, y_eval, ctx.scaler,
                    ctx.schema.names,
                )
            )
            X_scaled = ctx.scaler.scale(X_eval)
            for i, stage in enumerate(result.stage_of_success):
                if stage in STAGES:
                    ok = candidate_is_valid(
                        X_scaled[i], result.candidates[i], gate_cset, ctx.schema,
                        ctx.scaler, cascade.epsilon,
                    )
                    if not ok:
                        audit_failures.append(
                            f"scenario {sid} seed {seed} example {i}: accepted candidate "
                            f"fails the independent validity audit"
                        )

        reports.append(
            run_scenario(
                spec, target, ctx.train_ds, ctx.eval_ds, ctx.cset, run_cfg, seeds,
                model_name=model_name, attack_name=attack, collector=collect,
            )
        )

    payload = {
        "config": ctx.resolved_summary(),
        "attack": attack,
        "model": model_name,
        "scenarios": {r.scenario: r.to_json_dict() for r in reports},
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out_dir / "timing.json", "w", encoding="utf-8") as fh:
        json.dump({r.scenario: r.timing_dict() for r in reports}, fh, sort_keys=True, indent=2)
        fh.write("\n")

    csv_rows = [row for r in reports for row in r.csv_rows()]
    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(csv_rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(csv_rows)

    if outcome_rows:
        with open(out_dir / "outcomes.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(outcome_rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(outcome_rows)

    for r in reports:
        mean, ci = r.robust_accuracy
        print(f"{r.scenario} {attack}: robust_accuracy = {mean:.4f} +/- {ci:.4f}")
    if audit_failures:
        for line in audit_failures[:10]:
            print(f"AUDIT FAILURE: {line}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    constraints_text = Path(args.constraints).read_text(encoding="utf-8")
    cset = parse_constraints(constraints_text, schema)
    scaler = Scaler(schema)
    path = Path(args.candidates)
    if not path.exists():
        raise ConfigError(f"candidates file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: no candidate rows")
    missing = [
        c
        for name in schema.names
        for c in (f"orig__{name}", f"cand__{name}")
        if c not in rows[0]
    ]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")

    n_bad = 0
    satisfied = {c.name: 0 for c in cset.constraints}
    for idx, row in enumerate(rows):
        x0 = np.array([float(row[f"orig__{n}"]) for n in schema.names])
        cand = np.array([float(row[f"cand__{n}"]) for n in schema.names])
        report = check_point(cand, cset, schema, x0=x0)
        for name, ok in report.relation_ok:
            satisfied[name] += int(ok)
        frozen = ~schema.mutable_mask
        immutable_ok = bool(np.all(cand[frozen] == x0[frozen]))
        budget_ok = True
        if args.epsilon is not None:
            delta = scaler.scale(cand) - scaler.scale(x0)
            budget_ok = float(np.linalg.norm(delta)) <= args.epsilon + 1e-6
        if not (report.overall and immutable_ok and budget_ok):
            n_bad += 1
            if n_bad <= 10:
                reasons = report.failures()
                if not immutable_ok:
                    reasons.append("immutable feature changed")
                if not budget_ok:
                    reasons.append("perturbation budget exceeded")
                print(f"row {idx}: INVALID ({'; '.join(reasons)})")

    for name in satisfied:
        rate = satisfied[name] / len(rows)
        print(f"constraint {name}: satisfaction {rate:.6f}")
    print(f"{len(rows) - n_bad}/{len(rows)} rows valid")
    return EXIT_OK if n_bad == 0 else EXIT_INVALID


# entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabattack",
        description="Constrained adversarial attacks on tabular binary classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train standard (and robust) target models")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None)
    p_train.set_defaults(func=cmd_train)

    p_attack = sub.add_parser("attack", help="run attacks/scenarios and write reports")
    p_attack.add_argument("--config", required=True)
    p_attack.add_argument("--scenario", default=None, help="comma-separated scenario ids")
    p_attack.add_argument("--attack", default=None, choices=(*STAGES, "caa"))
    p_attack.add_argument("--epsilon", type=float, default=None)
    p_attack.add_argument("--seeds", default=None, help="comma-separated seed list")
    p_attack.add_argument("--model", default="standard",
                          help="'standard', 'robust', or a model file path")
    p_attack.add_argument("--out", default=None)
    p_attack.add_argument("--threads", type=int, default=1)
    p_attack.set_defaults(func=cmd_attack)

    p_val = sub.add_parser("validate", help="audit a candidates file for validity")
    p_val.add_argument("--candidates", required=True)
    p_val.add_argument("--schema", required=True)
    p_val.add_argument("--constraints", required=True)
    p_val.add_argument("--epsilon", type=float, default=None)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TabAttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
