"""Computational core: numerics, model, posterior, information, regret, blind estimation."""
