"""Paired comparisons between objectives: t-test, Wilcoxon, Cohen's d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, stdtr
from scipy.stats import rankdata

from .errors import ParameterError

# Exact signed-rank enumeration is used at or below this sample size
# (2^n sign patterns).
WILCOXON_EXACT_MAX_N = 12


@dataclass(frozen=True)
class PairedComparison:
    name: str
    mean_diff: float
    t_stat: float
    p_value_t: float
    wilcoxon_stat: float
    wilcoxon_p: float
    cohens_d: float
    n: int


def paired_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """Two-sided paired t-test; returns (t, p, mean_diff).

    Degenerate case of identical differences everywhere (zero sample std)
    returns t = 0, p = 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ParameterError("need n >= 2 pairs")
    d = a - b
    mean_diff = float(d.mean())
    s_d = float(d.std(ddof=1))
    if s_d == 0.0:
        return 0.0, 1.0, mean_diff
    t = mean_diff / (s_d / math.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return float(t), min(p, 1.0), mean_diff


def _signed_ranks(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop zero differences; average ranks of |d| for ties."""
    d = d[d != 0.0]
    ranks = rankdata(np.abs(d)) if d.size else np.array([])
    return d, ranks


def wilcoxon_exact_p(d: np.ndarray) -> float:
    """Two-sided exact p by enumerating all 2^n sign patterns.

    p = P(W+ <= w) + P(W+ >= T - w) with w = min(W+, W-), which equals
    the usual doubled one-tail by the symmetry of the null distribution.
    """
    d, ranks = _signed_ranks(np.asarray(d, dtype=float))
    n = d.size
    if n == 0:
        return 1.0
    if n > WILCOXON_EXACT_MAX_N:
        raise ParameterError(f"exact enumeration limited to n <= {WILCOXON_EXACT_MAX_N}")
    w_plus = float(ranks[d > 0].sum())
    total = float(ranks.sum())
    w = min(w_plus, total - w_plus)
    count = 0
    for mask in range(1 << n):
        s = 0.0
        for i in range(n):
            if mask >> i & 1:
                s += ranks[i]
        if s <= w + 1e-9 or s >= total - w - 1e-9:
            count += 1
    return min(count / (1 << n), 1.0)


def wilcoxon_normal_p(d: np.ndarray) -> tuple[float, float]:
    """Two-sided normal-approximation p with tie-corrected variance and a
    0.5 continuity correction; returns (W, p) with W = min(W+, W-)."""
    d, ranks = _signed_ranks(np.asarray(d, dtype=float))
    n = d.size
    if n == 0:
        return 0.0, 1.0
    w_plus = float(ranks[d > 0].sum())
    total = float(ranks.sum())
    w = min(w_plus, total - w_plus)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(counts ** 3 - counts)) / 48.0
    if var <= 0.0:
        return w, 1.0
    z = (w - mean + 0.5) / math.sqrt(var)
    p = 2.0 * float(ndtr(z))
    return w, min(p, 1.0)


def wilcoxon_signed_rank(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Paired signed-rank test; exact enumeration for small samples, else
    the tie-corrected normal approximation. Returns (W, two-sided p)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    nonzero, ranks = _signed_ranks(d)
    n = nonzero.size
    if n == 0:
        return 0.0, 1.0
    w_plus = float(ranks[nonzero > 0].sum())
    w = min(w_plus, float(ranks.sum()) - w_plus)
    if n <= WILCOXON_EXACT_MAX_N:
        return w, wilcoxon_exact_p(d)
    return wilcoxon_normal_p(d)


def cohens_d_pooled(a: np.ndarray, b: np.ndarray) -> float:
    """Pooled-variance effect size between two groups (sample variances).

    Returns 0 when both groups are constant with equal means; NaN when
    constant with different means.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ParameterError("each group needs >= 2 observations")
    na, nb = a.size, b.size
    pooled_var = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2)
    diff = float(a.mean() - b.mean())
    if pooled_var == 0.0:
        return 0.0 if diff == 0.0 else math.nan
    return diff / math.sqrt(float(pooled_var))


def compare_paired(name: str, a: np.ndarray, b: np.ndarray) -> PairedComparison:
    """All three statistics for one named comparison (a minus b)."""
    t, p_t, mean_diff = paired_t_test(a, b)
    w, p_w = wilcoxon_signed_rank(a, b)
    d = cohens_d_pooled(a, b)
    return PairedComparison(name=name, mean_diff=mean_diff, t_stat=t,
                            p_value_t=p_t, wilcoxon_stat=w, wilcoxon_p=p_w,
                            cohens_d=d, n=int(np.asarray(a).size))
