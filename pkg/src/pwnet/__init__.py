"""Exact expected rewards of probabilistic workflow nets."""

__version__ = "0.1.0"
