"""Experiment configs, the row work pool, the runner and result emission."""
