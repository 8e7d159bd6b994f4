"""Backtesting and parameter-optimization engine with a composite
anti-overfitting objective, walk-forward and Monte Carlo study protocols,
and paired statistical comparison of objective functions."""

__version__ = "0.1.0"
