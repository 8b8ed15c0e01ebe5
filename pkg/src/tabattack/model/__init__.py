"""Feedforward binary classifier, training loops, metrics, and access control."""
