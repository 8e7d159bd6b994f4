"""Strategy parameter spaces, random samplers, and long/flat signal rules."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .data import PriceSeries
from .errors import ParameterError
from .indicators import bollinger, macd, rsi


class StrategyKind(str, Enum):
    RSI = "rsi"
    MACD = "macd"
    BOLLINGER = "bollinger"


@dataclass(frozen=True)
class RsiParams:
    period: int
    oversold: float
    overbought: float

    kind = StrategyKind.RSI

    def __post_init__(self):
        if self.period < 2:
            raise ParameterError("rsi period must be >= 2")
        if not 0 < self.oversold < self.overbought < 100:
            raise ParameterError(
                f"need 0 < oversold < overbought < 100, got "
                f"{self.oversold}/{self.overbought}")


@dataclass(frozen=True)
class MacdParams:
    fast: int
    slow: int
    signal: int

    kind = StrategyKind.MACD

    def __post_init__(self):
        if self.fast < 2 or self.signal < 2:
            raise ParameterError("macd periods must be >= 2")
        if self.fast >= self.slow:
            raise ParameterError(f"fast ({self.fast}) must be < slow ({self.slow})")


@dataclass(frozen=True)
class BollingerParams:
    window: int
    k: float

    kind = StrategyKind.BOLLINGER

    def __post_init__(self):
        if self.window < 5:
            raise ParameterError("bollinger window must be >= 5")
        if self.k <= 0:
            raise ParameterError("bollinger k must be > 0")


StrategyParams = RsiParams | MacdParams | BollingerParams

# Uniform sampling ranges bracketing the conventional defaults
# (RSI 14/30/70, MACD 12/26/9, Bollinger 20/2). Integers drawn inclusive.
RSI_PERIOD_RANGE = (7, 28)
RSI_OVERSOLD_RANGE = (15.0, 40.0)
RSI_OVERBOUGHT_RANGE = (60.0, 85.0)
MACD_FAST_RANGE = (5, 20)
MACD_SLOW_RANGE = (21, 50)
MACD_SIGNAL_RANGE = (5, 15)
BOLLINGER_WINDOW_RANGE = (10, 50)
BOLLINGER_K_RANGE = (1.0, 3.0)


def sample_params(kind: StrategyKind, rng: np.random.Generator) -> StrategyParams:
    """Draw one parameterization uniformly from the family's search space."""
    if kind == StrategyKind.RSI:
        while True:
            period = int(rng.integers(RSI_PERIOD_RANGE[0], RSI_PERIOD_RANGE[1] + 1))
            oversold = float(rng.uniform(*RSI_OVERSOLD_RANGE))
            overbought = float(rng.uniform(*RSI_OVERBOUGHT_RANGE))
            if oversold < overbought:
                return RsiParams(period, oversold, overbought)
    if kind == StrategyKind.MACD:
        fast = int(rng.integers(MACD_FAST_RANGE[0], MACD_FAST_RANGE[1] + 1))
        slow = int(rng.integers(MACD_SLOW_RANGE[0], MACD_SLOW_RANGE[1] + 1))
        signal = int(rng.integers(MACD_SIGNAL_RANGE[0], MACD_SIGNAL_RANGE[1] + 1))
        return MacdParams(fast, slow, signal)
    if kind == StrategyKind.BOLLINGER:
        window = int(rng.integers(BOLLINGER_WINDOW_RANGE[0],
                                  BOLLINGER_WINDOW_RANGE[1] + 1))
        k = float(rng.uniform(*BOLLINGER_K_RANGE))
        return BollingerParams(window, k)
    raise ParameterError(f"unknown strategy kind {kind!r}")


def params_to_json(params: StrategyParams) -> str:
    doc = {"kind": params.kind.value}
    doc.update(asdict(params))
    return json.dumps(doc, sort_keys=True)


def params_from_json(text: str) -> StrategyParams:
    doc = json.loads(text)
    kind = StrategyKind(doc.pop("kind"))
    cls = {StrategyKind.RSI: RsiParams, StrategyKind.MACD: MacdParams,
           StrategyKind.BOLLINGER: BollingerParams}[kind]
    return cls(**doc)


def signals(params: StrategyParams, series: PriceSeries) -> np.ndarray:
    """Long/flat position per bar as a boolean array (True = long).

    Long-only state machine on closes, initial state flat, flat during
    indicator warm-up:
      - RSI: enter on a cross up out of the oversold zone
        (prev < oversold <= current); exit once RSI >= overbought.
      - MACD: enter when the MACD line crosses above the signal line;
        exit when it crosses below.
      - Bollinger: enter when the close drops below the lower band;
        exit once the close is at or above the middle band.
    """
    closes = series.closes
    n = len(closes)

    if isinstance(params, RsiParams):
        ind = rsi(closes, params.period)
        prev = np.concatenate([[np.nan], ind[:-1]])
        valid = ~(np.isnan(ind) | np.isnan(prev))
        with np.errstate(invalid="ignore"):
            enter = valid & (prev < params.oversold) & (ind >= params.oversold)
            leave = valid & (ind >= params.overbought)
    elif isinstance(params, MacdParams):
        macd_line, signal_line, _ = macd(closes, params.fast, params.slow,
                                         params.signal)
        diff = macd_line - signal_line
        prev = np.concatenate([[np.nan], diff[:-1]])
        valid = ~(np.isnan(diff) | np.isnan(prev))
        with np.errstate(invalid="ignore"):
            enter = valid & (prev <= 0) & (diff > 0)
            leave = valid & (prev >= 0) & (diff < 0)
    elif isinstance(params, BollingerParams):
        middle, _, lower = bollinger(closes, params.window, params.k)
        valid = ~np.isnan(middle)
        with np.errstate(invalid="ignore"):
            enter = valid & (closes < lower)
            leave = valid & (closes >= middle)
    else:
        raise ParameterError(f"unknown params type {type(params)!r}")

    pos = np.zeros(n, dtype=bool)
    long = False
    enter_l, leave_l, valid_l = enter.tolist(), leave.tolist(), valid.tolist()
    for i in range(n):
        if not valid_l[i]:
            continue
        if long:
            if leave_l[i]:
                long = False
        elif enter_l[i]:
            long = True
        pos[i] = long
    return pos
