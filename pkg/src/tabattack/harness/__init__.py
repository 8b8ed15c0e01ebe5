"""Attack cascade, evaluation metrics, and the ten-scenario harness."""
