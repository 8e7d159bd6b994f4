"""OHLCV data ingestion, synthetic series generation, and train/test splits.

All randomness in this module goes through numpy's Philox (4x64)
counter-based bit generator so a given seed reproduces the same series
bit-for-bit on any platform.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CsvParseError,
    CsvValidationError,
    InsufficientDataError,
    ParameterError,
)

CSV_HEADER = ["date", "open", "high", "low", "close", "volume"]


@dataclass(frozen=True)
class OhlcvBar:
    """One daily bar. Prices strictly positive, low <= open/close <= high."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def validate(self) -> None:
        if min(self.open, self.high, self.low, self.close) <= 0:
            raise CsvValidationError(f"{self.date}: non-positive price")
        if self.volume < 0:
            raise CsvValidationError(f"{self.date}: negative volume")
        if not (self.low <= self.open <= self.high
                and self.low <= self.close <= self.high):
            raise CsvValidationError(
                f"{self.date}: OHLC ordering violated "
                f"(o={self.open} h={self.high} l={self.low} c={self.close})")


class PriceSeries:
    """Ordered daily bars for one asset, with cached numpy views.

    Bars must be strictly increasing by date; length >= 2.
    """

    def __init__(self, asset_id: str, bars: list[OhlcvBar],
                 _validated: bool = False):
        if len(bars) < 2:
            raise InsufficientDataError(
                f"{asset_id}: need at least 2 bars, got {len(bars)}")
        if not _validated:
            for bar in bars:
                bar.validate()
            for prev, cur in zip(bars, bars[1:]):
                if cur.date == prev.date:
                    raise CsvValidationError(
                        f"{asset_id}: duplicate date {cur.date}")
                if cur.date < prev.date:
                    raise CsvValidationError(
                        f"{asset_id}: bars not sorted at {cur.date}")
        self.asset_id = asset_id
        self.bars = list(bars)
        self.dates = [b.date for b in bars]
        self._dates64 = np.array(self.dates, dtype="datetime64[D]")
        self.opens = np.array([b.open for b in bars])
        self.highs = np.array([b.high for b in bars])
        self.lows = np.array([b.low for b in bars])
        self.closes = np.array([b.close for b in bars])
        self.volumes = np.array([b.volume for b in bars])

    def __len__(self) -> int:
        return len(self.bars)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PriceSeries)
                and self.asset_id == other.asset_id
                and self.bars == other.bars)

    @property
    def start_date(self) -> dt.date:
        return self.dates[0]

    @property
    def end_date(self) -> dt.date:
        """Last bar date."""
        return self.dates[-1]

    @property
    def span_end(self) -> dt.date:
        """Exclusive end of the covered span (last bar date + 1 day)."""
        return self.dates[-1] + dt.timedelta(days=1)

    def index_window(self, start: dt.date, end: dt.date) -> tuple[int, int]:
        """Half-open bar index range [i0, i1) covering dates in [start, end)."""
        i0 = int(np.searchsorted(self._dates64, np.datetime64(start, "D"), "left"))
        i1 = int(np.searchsorted(self._dates64, np.datetime64(end, "D"), "left"))
        return i0, i1

    def slice(self, start: dt.date, end: dt.date) -> "PriceSeries":
        """Sub-series of bars with start <= date < end."""
        i0, i1 = self.index_window(start, end)
        if i1 - i0 < 2:
            raise InsufficientDataError(
                f"{self.asset_id}: window [{start}, {end}) holds "
                f"{i1 - i0} bars, need >= 2")
        # Bars were validated when this series was built.
        return PriceSeries(self.asset_id, self.bars[i0:i1], _validated=True)


@dataclass(frozen=True)
class SplitSpec:
    """Half-open train and validation date intervals with an embargo gap."""

    train_start: dt.date
    train_end: dt.date
    val_start: dt.date
    val_end: dt.date

    def __post_init__(self):
        if not (self.train_start < self.train_end
                <= self.val_start < self.val_end):
            raise ParameterError(f"split intervals out of order: {self}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometric random walk spec: piecewise (length, drift, vol) regimes."""

    n_days: int
    initial_price: float
    regimes: tuple[tuple[int, float, float], ...]
    seed: int
    start_date: dt.date = dt.date(2010, 1, 1)

    def __post_init__(self):
        if self.n_days < 2:
            raise ParameterError("n_days must be >= 2")
        if self.initial_price <= 0:
            raise ParameterError("initial_price must be positive")
        if sum(r[0] for r in self.regimes) != self.n_days:
            raise ParameterError("regime lengths must sum to n_days")
        if any(r[2] < 0 for r in self.regimes):
            raise ParameterError("vol_per_day must be non-negative")

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticSpec":
        start = doc.get("start_date")
        kwargs = {}
        if start is not None:
            kwargs["start_date"] = dt.date.fromisoformat(start)
        return cls(
            n_days=int(doc["n_days"]),
            initial_price=float(doc["initial_price"]),
            regimes=tuple((int(a), float(b), float(c))
                          for a, b, c in doc["regimes"]),
            seed=int(doc["seed"]),
            **kwargs,
        )


def _parse_row(line_no: int, row: list[str]) -> OhlcvBar:
    if len(row) != 6:
        raise CsvParseError(line_no, f"expected 6 fields, got {len(row)}")
    try:
        d = dt.date.fromisoformat(row[0].strip())
    except ValueError:
        raise CsvParseError(line_no, f"bad date {row[0]!r}") from None
    try:
        o, h, l, c, v = (float(x) for x in row[1:])
    except ValueError:
        raise CsvParseError(line_no, f"non-numeric field in {row!r}") from None
    return OhlcvBar(d, o, h, l, c, v)


def parse_ohlcv_csv(text: str, asset_id: str = "") -> PriceSeries:
    """Parse a `date,open,high,low,close,volume` CSV into a PriceSeries.

    Rows may arrive unsorted; output is sorted ascending by date.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CsvParseError(1, "empty document")
    header = [h.strip().lower() for h in rows[0]]
    if header != CSV_HEADER:
        raise CsvParseError(1, f"bad header {rows[0]!r}, want {CSV_HEADER}")
    bars = [_parse_row(i, row) for i, row in enumerate(rows[1:], start=2)
            if row]
    bars.sort(key=lambda b: b.date)
    return PriceSeries(asset_id, bars)


def _fmt(x: float) -> str:
    # repr round-trips exactly; keep integral values compact
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def to_ohlcv_csv(series: PriceSeries) -> str:
    """Serialize a PriceSeries; parse(to_csv(s)) == s."""
    out = [",".join(CSV_HEADER)]
    for b in series.bars:
        out.append(",".join([b.date.isoformat(), _fmt(b.open), _fmt(b.high),
                             _fmt(b.low), _fmt(b.close), _fmt(b.volume)]))
    return "\n".join(out) + "\n"


def _trading_dates(start: dt.date, n: int) -> list[dt.date]:
    """n consecutive weekdays starting at the first weekday >= start."""
    dates = []
    d = start
    while len(dates) < n:
        if d.weekday() < 5:
            dates.append(d)
        d += dt.timedelta(days=1)
    return dates


def generate_synthetic_series(spec: SyntheticSpec,
                              asset_id: str = "synthetic") -> PriceSeries:
    """Seeded geometric random walk over weekday bars.

    close[t+1] = close[t] * exp(drift + vol * g[t]) with g standard normal
    from Philox(seed). Highs/lows are max/min(open, close) inflated/deflated
    by |vol * g'| with an independent draw per bar.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    n = spec.n_days
    drift = np.empty(n)
    vol = np.empty(n)
    pos = 0
    for length, d, v in spec.regimes:
        drift[pos:pos + length] = d
        vol[pos:pos + length] = v
        pos += length

    # Fixed draw order: n-1 step shocks, then n high/low shocks, then volumes.
    g = rng.standard_normal(n - 1)
    gp = rng.standard_normal(n)
    volumes = rng.integers(100_000, 1_000_000, size=n)

    closes = np.empty(n)
    closes[0] = spec.initial_price
    steps = np.exp(drift[1:] + vol[1:] * g)
    closes[1:] = spec.initial_price * np.cumprod(steps)

    opens = np.empty(n)
    opens[0] = spec.initial_price
    opens[1:] = closes[:-1]

    shock = np.abs(vol * gp)
    highs = np.maximum(opens, closes) * (1.0 + shock)
    lows = np.minimum(opens, closes) * (1.0 - shock)
    # Guard against a pathological draw pushing low non-positive
    lows = np.maximum(lows, np.minimum(opens, closes) * 1e-6)

    dates = _trading_dates(spec.start_date, n)
    bars = [OhlcvBar(dates[i], float(opens[i]), float(highs[i]),
                     float(lows[i]), float(closes[i]), float(volumes[i]))
            for i in range(n)]
    return PriceSeries(asset_id, bars)


def add_years(d: dt.date, years: int) -> dt.date:
    """Calendar-year shift; Feb 29 maps to Feb 28 in non-leap years."""
    try:
        return d.replace(year=d.year + years)
    except ValueError:
        return d.replace(year=d.year + years, day=28)


def make_walkforward_splits(series: PriceSeries, train_years: int = 4,
                            val_years: int = 2, step_years: int = 1,
                            embargo_days: int = 30) -> list[SplitSpec]:
    """Rolling train/validation splits stepped forward by step_years.

    Validation starts embargo_days calendar days after training ends.
    Emits every split whose validation interval fits within the series span.
    """
    if min(train_years, val_years, step_years) < 1 or embargo_days < 0:
        raise ParameterError("window sizes must be >= 1 year, embargo >= 0")
    splits = []
    i = 0
    while True:
        train_start = add_years(series.start_date, i * step_years)
        train_end = add_years(train_start, train_years)
        val_start = train_end + dt.timedelta(days=embargo_days)
        val_end = add_years(val_start, val_years)
        if val_end > series.span_end:
            break
        splits.append(SplitSpec(train_start, train_end, val_start, val_end))
        i += 1
    if not splits:
        need = add_years(series.start_date, train_years + val_years)
        need += dt.timedelta(days=embargo_days)
        raise InsufficientDataError(
            f"{series.asset_id}: series ends {series.end_date}, needs to "
            f"reach {need} for one split "
            f"({train_years}y train + {embargo_days}d embargo + {val_years}y val)")
    return splits


def make_chrono_split(series: PriceSeries, train_fraction: float = 0.7,
                      embargo_days: int = 30,
                      min_bars_per_side: int = 60) -> SplitSpec:
    """Single chronological split at train_fraction of the calendar span."""
    if not 0 < train_fraction < 1:
        raise ParameterError("train_fraction must be in (0, 1)")
    total_days = (series.span_end - series.start_date).days
    train_end = series.start_date + dt.timedelta(
        days=int(total_days * train_fraction))
    val_start = train_end + dt.timedelta(days=embargo_days)
    if val_start >= series.span_end:
        raise InsufficientDataError(
            f"{series.asset_id}: embargo consumes the whole validation side "
            f"(val would start {val_start}, span ends {series.span_end})")
    split = SplitSpec(series.start_date, train_end, val_start, series.span_end)
    i0, i1 = series.index_window(split.train_start, split.train_end)
    j0, j1 = series.index_window(split.val_start, split.val_end)
    if i1 - i0 < min_bars_per_side or j1 - j0 < min_bars_per_side:
        raise InsufficientDataError(
            f"{series.asset_id}: chrono split leaves {i1 - i0} train / "
            f"{j1 - j0} test bars, need >= {min_bars_per_side} each")
    return split


def load_synthetic_manifest(text: str) -> list[tuple[str, SyntheticSpec]]:
    """Parse a JSON manifest: {"assets": [{"asset_id": ..., <spec fields>}]}."""
    doc = json.loads(text)
    out = []
    for entry in doc["assets"]:
        asset_id = entry["asset_id"]
        out.append((asset_id, SyntheticSpec.from_json(entry)))
    return out
