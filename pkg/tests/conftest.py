"""Shared builders for the test suite."""

import datetime as dt

import numpy as np

from gtscore.data import OhlcvBar, PriceSeries


def make_series(closes, asset_id="T", start=dt.date(2020, 1, 1),
                opens=None, spread=0.0):
    """PriceSeries from a close list; opens default to the prior close.

    `spread` widens high/low around open/close by a fraction.
    """
    closes = [float(c) for c in closes]
    if opens is None:
        opens = [closes[0]] + closes[:-1]
    bars = []
    d = start
    for o, c in zip(opens, closes):
        hi = max(o, c) * (1.0 + spread)
        lo = min(o, c) * (1.0 - spread)
        bars.append(OhlcvBar(d, o, hi, lo, c, 1000.0))
        d += dt.timedelta(days=1)
    return PriceSeries(asset_id, bars)


def random_closes(rng, n, start=100.0, vol=0.02):
    """Positive random-walk closes."""
    steps = np.exp(vol * rng.standard_normal(n - 1))
    return np.concatenate([[start], start * np.cumprod(steps)])
