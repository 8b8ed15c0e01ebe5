"""Training loops: minibatch SGD with optional Madry-style adversarial batches.

Adversarial mode replaces each minibatch with bounds-clipped L2 PGD examples
crafted against the current weights. Relation constraints are never consulted
here; robust training deliberately uses unconstrained perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tabattack.attacks.common import project
from tabattack.data.dataset import Dataset
from tabattack.data.scaling import Scaler
from tabattack.exceptions import ConfigError, TrainingDivergedError
from tabattack.model.metrics import model_auc
from tabattack.model.mlp import MlpModel


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 0.1
    weight_decay: float = 0.0
    adversarial: bool = False
    adv_epsilon: float | None = None
    adv_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.adversarial:
            if self.adv_epsilon is None or self.adv_steps is None:
                raise ConfigError("adversarial training requires adv_epsilon and adv_steps")
            if self.adv_epsilon <= 0 or self.adv_steps < 1:
                raise ConfigError("adv_epsilon must be positive and adv_steps at least 1")
        elif self.adv_epsilon is not None or self.adv_steps is not None:
            raise ConfigError("adv_epsilon/adv_steps are only valid with adversarial=True")


@dataclass
class TrainHistory:
    train_losses: list[float] = field(default_factory=list)
    val_aucs: list[float] = field(default_factory=list)
    best_epoch: int = -1


def _stratified_split(y: np.ndarray, val_fraction: float, rng: np.random.Generator):
    train_idx, val_idx = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_val = int(round(val_fraction * idx.size))
        if idx.size > 1:
            n_val = min(max(n_val, 1), idx.size - 1)
        else:
            n_val = 0
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    return np.concatenate(train_idx), np.concatenate(val_idx)


def _adversarial_batch(
    model: MlpModel, X: np.ndarray, y: np.ndarray, epsilon: float, steps: int
) -> np.ndarray:
    step = 2.0 * epsilon / steps
    X_adv = X.copy()
    for _ in range(steps):
        grads = model.input_gradients_batch(X_adv, y)
        norms = np.linalg.norm(grads, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        X_adv = X_adv + step * grads / norms
        for r in range(X_adv.shape[0]):
            X_adv[r] = project(X[r], X_adv[r], epsilon)
    return X_adv


def train(
    model_init: MlpModel, data: Dataset, cfg: TrainConfig
) -> tuple[MlpModel, TrainHistory]:
    """Train a copy of ``model_init``; returns the best-validation-AUC checkpoint.

    Deterministic given the config seed. A fixed 20% stratified validation
    split is scored after every epoch; the checkpoint with the highest AUC
    (earliest on ties) is returned.
    """
    if data.n == 0:
        raise ConfigError("cannot train on an empty dataset")
    history = TrainHistory()
    if cfg.epochs == 0:
        return model_init, history

    scaler = Scaler(data.schema)
    X_all = scaler.scale(data.X)
    y_all = data.y
    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = _stratified_split(y_all, 0.2, rng)
    X_train, y_train = X_all[train_idx], y_all[train_idx]
    X_val, y_val = X_all[val_idx], y_all[val_idx]
    has_val = val_idx.size > 0 and len(np.unique(y_val)) == 2

    model = model_init.copy()
    best = model.copy()
    best_auc = -np.inf
    for epoch in range(cfg.epochs):
        order = rng.permutation(X_train.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            Xb, yb = X_train[idx], y_train[idx]
            if cfg.adversarial:
                assert cfg.adv_epsilon is not None and cfg.adv_steps is not None
                Xb = _adversarial_batch(model, Xb, yb, cfg.adv_epsilon, cfg.adv_steps)
            loss, grads_w, grads_b = model.loss_and_param_gradients(Xb, yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            for layer in range(len(model.weights)):
                gw = grads_w[layer]
                if cfg.weight_decay:
                    gw = gw + cfg.weight_decay * model.weights[layer]
                model.weights[layer] -= cfg.learning_rate * gw
                model.biases[layer] -= cfg.learning_rate * grads_b[layer]
            epoch_loss += loss
            n_batches += 1
        history.train_losses.append(epoch_loss / max(n_batches, 1))
        if has_val:
            val_auc = model_auc(model, X_val, y_val)
        else:
            val_auc = float("nan")
        history.val_aucs.append(val_auc)
        if has_val and val_auc > best_auc:
            best_auc = val_auc
            best = model.copy()
            history.best_epoch = epoch
    if not has_val:
        best = model
        history.best_epoch = cfg.epochs - 1
    best.fingerprint = (
        f"epochs={cfg.epochs},batch={cfg.batch_size},lr={cfg.learning_rate},"
        f"decay={cfg.weight_decay},adversarial={cfg.adversarial},seed={cfg.seed}"
    )
    return best, history
