"""Prescribed best-approximation distances on nested subspace chains in R^D."""

__version__ = "0.1.0"
