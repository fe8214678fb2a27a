"""Bayesian learning of monotone DNF markers for binary outcomes."""

__version__ = "0.1.0"
