"""Schemas, datasets, scaling, and attacker dataset-access sampling."""
