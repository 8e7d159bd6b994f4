"""Statistical building blocks for the objectives.

Dispersion measures use the population convention (divide by n) so they
are defined down to a single observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class MetricContext:
    """Everything an objective needs about one backtest window."""

    mu: float          # mean trade return
    sigma: float       # population std of trade returns
    mu_m: float        # per-observation benchmark mean
    n: int             # number of trades
    sigma_d: float     # downside deviation
    r2: float          # equity-curve consistency in [0, 1]
    z: float           # standardized excess-mean statistic

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.sigma < 0 or self.sigma_d < 0:
            raise ParameterError("dispersion must be non-negative")
        if not 0.0 <= self.r2 <= 1.0:
            raise ParameterError(f"r2 must be in [0, 1], got {self.r2}")


def mean_and_std(returns: np.ndarray) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise ParameterError("empty return sequence")
    return float(r.mean()), float(r.std())


def downside_deviation(returns: np.ndarray, mar: float = 0.0) -> float:
    """Root mean square of shortfalls below the minimum acceptable return."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise ParameterError("empty return sequence")
    shortfall = np.minimum(r - mar, 0.0)
    return float(math.sqrt(np.mean(shortfall ** 2)))


def sharpe(mu: float, sigma: float, eps: float) -> float:
    """Per-observation Sharpe ratio, risk-free rate 0, no annualization."""
    if eps <= 0:
        raise ParameterError("eps must be > 0")
    return mu / (sigma + eps)


def sortino(mu: float, sigma_d: float, eps: float) -> float:
    """Per-observation Sortino ratio against a zero target."""
    if eps <= 0:
        raise ParameterError("eps must be > 0")
    return mu / (sigma_d + eps)


def r_squared_consistency(equity_points: np.ndarray) -> float:
    """R-squared of the equity curve regressed on observation index.

    A perfectly steady equity ramp scores 1; flat equity (zero total
    variance) scores 0 by convention.
    """
    y = np.asarray(equity_points, dtype=float)
    n = y.size
    if n < 2:
        raise ParameterError("need >= 2 equity points")
    x = np.arange(n, dtype=float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot == 0.0:
        return 0.0
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - ym - slope * (x - xm)
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 - ss_res / ss_tot
    return min(max(r2, 0.0), 1.0)


def z_score(mu: float, mu_m: float, sigma: float, n: int, eps: float) -> float:
    """Standardized excess mean (mu - mu_m) / (sigma / sqrt(n) + eps)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if eps <= 0:
        raise ParameterError("eps must be > 0")
    return (mu - mu_m) / (sigma / math.sqrt(n) + eps)


def generalization_ratio(out_of_sample_mean: float,
                         train_mean: float) -> float:
    """Out-of-sample over training mean return; NaN when the training mean
    is non-positive (such cells are excluded from aggregates)."""
    if train_mean <= 0.0:
        return math.nan
    return out_of_sample_mean / train_mean
