"""Offline learning of Nash equilibria in tabular two-player zero-sum Markov games."""

__version__ = "0.1.0"
