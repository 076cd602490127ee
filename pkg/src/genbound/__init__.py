"""Exact oracles and Monte Carlo estimators for expected
generalization-error bounds: per-sample and subset information
quantities on enumerable problems, and trajectory bounds for stochastic
gradient Langevin dynamics."""

__version__ = "0.1.0"
