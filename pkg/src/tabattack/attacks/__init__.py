"""Gradient and evolutionary attacks over the scaled feature cube."""

from tabattack.attacks.capgd import CapgdConfig, capgd, default_checkpoints
from tabattack.attacks.common import AttackOutcome, derive_seed, project, scaled_sign
from tabattack.attacks.cpgd import CpgdConfig, cpgd, step_schedule
from tabattack.attacks.moeva import MoevaConfig, evolve, non_dominated_ranks, objectives_batch

__all__ = [
    "AttackOutcome",
    "CapgdConfig",
    "CpgdConfig",
    "MoevaConfig",
    "capgd",
    "cpgd",
    "default_checkpoints",
    "derive_seed",
    "evolve",
    "non_dominated_ranks",
    "objectives_batch",
    "project",
    "scaled_sign",
    "step_schedule",
]
