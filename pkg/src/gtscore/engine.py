"""Signal execution: trades, trade-level returns, equity curve, benchmark.

Execution convention: a signal transition observed at bar i fills at bar
i+1's open (signals are computed on closes, so same-bar fills would peek).
A position still open at the window end is force-exited at the last bar's
close. Costs are a flat per-side haircut in basis points of notional,
charged on entry and exit.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .data import PriceSeries
from .errors import InsufficientDataError, ParameterError

BPS = 1e-4


@dataclass(frozen=True)
class TradeRecord:
    entry_date: dt.date
    exit_date: dt.date
    entry_price: float
    exit_price: float
    gross_return: float
    net_return: float


@dataclass
class BacktestResult:
    trades: list[TradeRecord]
    trade_returns: np.ndarray
    equity_points: np.ndarray
    total_return: float
    benchmark_total_return: float
    n_trades: int
    window: tuple[dt.date, dt.date]
    trade_exit_dates: list[dt.date]


def run_backtest(series: PriceSeries, positions: np.ndarray,
                 window_start: dt.date, window_end: dt.date,
                 cost_bps_per_side: float = 0.0) -> BacktestResult:
    """Execute long/flat signals over [window_start, window_end).

    `positions` must be aligned 1:1 with series bars. Only transitions at
    bars inside the window generate trades; the state before the first
    window bar is treated as flat.
    """
    if cost_bps_per_side < 0:
        raise ParameterError("cost_bps_per_side must be >= 0")
    if len(positions) != len(series):
        raise ParameterError("positions not aligned with series bars")
    if window_start < series.start_date or window_end > series.span_end:
        raise InsufficientDataError(
            f"window [{window_start}, {window_end}) outside series span "
            f"[{series.start_date}, {series.span_end})")
    i0, i1 = series.index_window(window_start, window_end)
    if i1 <= i0:
        raise InsufficientDataError(
            f"window [{window_start}, {window_end}) holds no bars")

    cost = 2.0 * cost_bps_per_side * BPS
    opens, closes, dates = series.opens.tolist(), series.closes.tolist(), series.dates
    sig_list = np.asarray(positions, dtype=bool).tolist()
    trades: list[TradeRecord] = []
    held = False
    entry_price = 0.0
    entry_date = dates[i0]
    pending: str | None = None
    prev_sig = False

    def close_trade(exit_date: dt.date, exit_price: float) -> None:
        gross = exit_price / entry_price - 1.0
        trades.append(TradeRecord(entry_date, exit_date, entry_price,
                                  exit_price, gross, gross - cost))

    for i in range(i0, i1):
        if pending == "enter":
            # Skip entries that would fill on the final bar: they would be
            # force-closed the same day with zero holding period.
            if i < i1 - 1:
                held = True
                entry_price = float(opens[i])
                entry_date = dates[i]
            pending = None
        elif pending == "exit":
            close_trade(dates[i], float(opens[i]))
            held = False
            pending = None
        sig = sig_list[i]
        if sig and not prev_sig and not held and pending is None:
            pending = "enter"
        elif prev_sig and not sig and held:
            pending = "exit"
        prev_sig = sig

    if held:
        close_trade(dates[i1 - 1], float(closes[i1 - 1]))

    trade_returns = np.array([t.net_return for t in trades])
    equity_points = np.cumprod(1.0 + trade_returns) - 1.0
    total_return = float(equity_points[-1]) if trades else 0.0
    benchmark = float(closes[i1 - 1] / closes[i0] - 1.0)
    return BacktestResult(
        trades=trades,
        trade_returns=trade_returns,
        equity_points=equity_points,
        total_return=total_return,
        benchmark_total_return=benchmark,
        n_trades=len(trades),
        window=(window_start, window_end),
        trade_exit_dates=[t.exit_date for t in trades],
    )


def benchmark_per_observation_mean(benchmark_total_return: float,
                                   n: int) -> float:
    """Per-trade-equivalent buy-and-hold mean: the geometric n-th root.

    Chosen so the strategy mean equals the benchmark mean exactly for an
    always-in, zero-cost strategy.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if benchmark_total_return <= -1:
        raise ParameterError("benchmark total return must be > -1")
    return float((1.0 + benchmark_total_return) ** (1.0 / n) - 1.0)


def benchmark_arithmetic_mean(benchmark_total_return: float, n: int) -> float:
    """Alternative per-observation benchmark: total return divided by n."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return benchmark_total_return / n


def apply_extra_costs(result: BacktestResult,
                      extra_bps_per_side: float) -> float:
    """Total compounded return with an extra per-side cost on every trade."""
    return recompound_with_costs(result.trade_returns, extra_bps_per_side)


def recompound_with_costs(trade_returns: np.ndarray,
                          extra_bps_per_side: float) -> float:
    """Compound trade returns after haircutting each by 2 * extra_bps."""
    if extra_bps_per_side < 0:
        raise ParameterError("extra_bps_per_side must be >= 0")
    r = np.asarray(trade_returns, dtype=float)
    if r.size == 0:
        return 0.0
    return float(np.prod(1.0 + r - 2.0 * extra_bps_per_side * BPS) - 1.0)


def trades_to_csv(trades: list[TradeRecord]) -> str:
    """Trade list as CSV with full-precision returns."""
    lines = ["entry_date,exit_date,entry_price,exit_price,gross_return,net_return"]
    for t in trades:
        lines.append(",".join([
            t.entry_date.isoformat(), t.exit_date.isoformat(),
            repr(t.entry_price), repr(t.exit_price),
            repr(t.gross_return), repr(t.net_return)]))
    return "\n".join(lines) + "\n"
