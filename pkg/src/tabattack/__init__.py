"""Constrained adversarial attacks and robustness evaluation for tabular binary classifiers."""

__version__ = "0.1.0"
