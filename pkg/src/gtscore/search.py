"""Seeded random-search trials and the two study protocols.

A trial draws `budget` parameter candidates from a generator keyed on
(seed, asset, strategy) only -- the objective kind is deliberately left
out of the key, so every objective scores the identical candidate pool
for a given cell and paired comparisons across objectives are meaningful.
Out-of-sample bars never enter candidate evaluation: the series is sliced
to the training window before the search.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import PriceSeries, SplitSpec, make_chrono_split, make_walkforward_splits
from .engine import BacktestResult, run_backtest
from .errors import DataError, InsufficientDataError, ParameterError
from .metrics import generalization_ratio
from .objective import ObjectiveConfig, ObjectiveKind, trial_loss
from .strategy import StrategyKind, StrategyParams, sample_params, signals

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 25
WALKFORWARD_SEED = 42
BASELINES = (ObjectiveKind.SHARPE, ObjectiveKind.SORTINO, ObjectiveKind.SIMPLE)


@dataclass(frozen=True)
class TrialSpec:
    asset_id: str
    strategy_kind: StrategyKind
    objective_kind: ObjectiveKind
    split: SplitSpec
    seed: int
    split_id: int = 0
    budget: int = DEFAULT_BUDGET
    cost_bps: float = 0.0

    def __post_init__(self):
        if self.budget < 1:
            raise ParameterError("budget must be >= 1")


@dataclass
class TrialResult:
    spec: TrialSpec
    best_params: StrategyParams
    best_loss: float
    train_total_return: float
    oos_total_return: float
    train_n_trades: int
    oos_n_trades: int
    evaluated: int
    degenerate: bool
    candidates: list[StrategyParams]
    oos_trade_returns: np.ndarray


def candidate_rng(seed: int, asset_id: str,
                  strategy_kind: StrategyKind) -> np.random.Generator:
    """Philox generator keyed by a stable hash of (seed, asset, strategy)."""
    digest = hashlib.sha256(
        f"{seed}|{asset_id}|{strategy_kind.value}".encode()).digest()
    key = int.from_bytes(digest[:8], "little")
    return np.random.Generator(np.random.Philox(key))


def draw_candidates(spec: TrialSpec) -> list[StrategyParams]:
    rng = candidate_rng(spec.seed, spec.asset_id, spec.strategy_kind)
    return [sample_params(spec.strategy_kind, rng) for _ in range(spec.budget)]


def backtest_window(params: StrategyParams, series: PriceSeries,
                    start, end, cost_bps: float) -> BacktestResult | None:
    """Backtest on the sub-series restricted to [start, end); None when the
    window is too short for the indicator warm-up."""
    try:
        window = series.slice(start, end)
    except InsufficientDataError:
        return None
    return _backtest_sliced(params, window, cost_bps)


def _backtest_sliced(params: StrategyParams, window: PriceSeries,
                     cost_bps: float) -> BacktestResult | None:
    try:
        sig = signals(params, window)
    except InsufficientDataError:
        return None
    return run_backtest(window, sig, window.start_date, window.span_end,
                        cost_bps)


def run_trial(spec: TrialSpec, series: PriceSeries,
              cfg: ObjectiveConfig) -> TrialResult:
    """Random search over the train window, then one out-of-sample pass.

    Ties on loss go to the first-seen candidate. A trial where every
    candidate hits the minimum-trade penalty is flagged degenerate.
    """
    candidates = draw_candidates(spec)
    split = spec.split
    try:
        train_window = series.slice(split.train_start, split.train_end)
    except InsufficientDataError:
        train_window = None
    best_loss = math.inf
    best_params = candidates[0]
    best_result: BacktestResult | None = None
    for params in candidates:
        result = (None if train_window is None else
                  _backtest_sliced(params, train_window, spec.cost_bps))
        loss = (cfg.below_min_penalty if result is None
                else trial_loss(spec.objective_kind, result, cfg))
        if loss < best_loss:
            best_loss = loss
            best_params = params
            best_result = result

    degenerate = best_loss >= cfg.below_min_penalty
    # Degenerate trials (every candidate gated) get a zero-trade
    # out-of-sample record; they stay in the table but are excluded from
    # generalization-ratio aggregates.
    oos = None if degenerate else backtest_window(
        best_params, series, split.val_start, split.val_end, spec.cost_bps)
    return TrialResult(
        spec=spec,
        best_params=best_params,
        best_loss=best_loss,
        train_total_return=best_result.total_return if best_result else 0.0,
        oos_total_return=oos.total_return if oos else 0.0,
        train_n_trades=best_result.n_trades if best_result else 0,
        oos_n_trades=oos.n_trades if oos else 0,
        evaluated=len(candidates),
        degenerate=degenerate,
        candidates=candidates,
        oos_trade_returns=(oos.trade_returns if oos else np.array([])),
    )


def _sort_key(r: TrialResult):
    s = r.spec
    return (s.asset_id, s.strategy_kind.value, s.objective_kind.value,
            s.split_id, s.seed)


def _run_one(args) -> TrialResult:
    spec, series, cfg = args
    return run_trial(spec, series, cfg)


def run_trials(specs: list[TrialSpec], series_by_asset: dict[str, PriceSeries],
               cfg: ObjectiveConfig, jobs: int = 1) -> list[TrialResult]:
    """Execute trials (optionally in parallel); output order is canonical
    and independent of scheduling."""
    work = [(s, series_by_asset[s.asset_id], cfg) for s in specs]
    if jobs <= 1:
        results = [run_trial(s, ser, cfg) for s, ser, cfg in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, work, chunksize=8))
    results.sort(key=_sort_key)
    return results


def walkforward_specs(assets: list[PriceSeries],
                      strategies: list[StrategyKind],
                      objectives: list[ObjectiveKind],
                      train_years: int = 4, val_years: int = 2,
                      step_years: int = 1, embargo_days: int = 30,
                      seed: int = WALKFORWARD_SEED,
                      budget: int = DEFAULT_BUDGET,
                      cost_bps: float = 0.0) -> list[TrialSpec]:
    """Cartesian product of assets x strategies x objectives x splits with
    one fixed seed per cell. Assets too short for a single split are
    skipped with a warning."""
    specs = []
    for series in assets:
        try:
            splits = make_walkforward_splits(series, train_years, val_years,
                                             step_years, embargo_days)
        except DataError as exc:
            logger.warning("skipping %s: %s", series.asset_id, exc)
            continue
        for strat in strategies:
            for obj in objectives:
                for i, split in enumerate(splits):
                    specs.append(TrialSpec(series.asset_id, strat, obj, split,
                                           seed=seed, split_id=i,
                                           budget=budget, cost_bps=cost_bps))
    return specs


def montecarlo_specs(assets: list[PriceSeries],
                     strategies: list[StrategyKind],
                     objectives: list[ObjectiveKind],
                     seeds: list[int],
                     train_fraction: float = 0.7, embargo_days: int = 30,
                     budget: int = DEFAULT_BUDGET,
                     cost_bps: float = 0.0) -> list[TrialSpec]:
    """Multi-seed study on one chronological split per asset."""
    if not seeds:
        raise ParameterError("seeds must be non-empty")
    specs = []
    for series in assets:
        try:
            split = make_chrono_split(series, train_fraction, embargo_days)
        except DataError as exc:
            logger.warning("skipping %s: %s", series.asset_id, exc)
            continue
        for strat in strategies:
            for obj in objectives:
                for seed in seeds:
                    specs.append(TrialSpec(series.asset_id, strat, obj, split,
                                           seed=seed, split_id=0,
                                           budget=budget, cost_bps=cost_bps))
    return specs


def run_walkforward(assets, strategies, objectives, cfg: ObjectiveConfig,
                    jobs: int = 1, **wf_kwargs) -> list[TrialResult]:
    specs = walkforward_specs(assets, strategies, objectives, **wf_kwargs)
    return run_trials(specs, {s.asset_id: s for s in assets}, cfg, jobs)


def run_montecarlo(assets, strategies, objectives, seeds,
                   cfg: ObjectiveConfig, jobs: int = 1,
                   **mc_kwargs) -> list[TrialResult]:
    specs = montecarlo_specs(assets, strategies, objectives, seeds,
                             **mc_kwargs)
    return run_trials(specs, {s.asset_id: s for s in assets}, cfg, jobs)


# --- Aggregation over plain row dicts -------------------------------------
# Aggregates operate on the same row dicts that land in the trial CSV, so
# the verify subcommand can recompute them from the file bit-for-bit.


def aggregate_by_objective(rows: list[dict]) -> list[dict]:
    """Per-objective mean/std of out-of-sample returns, train mean, and the
    generalization ratio (ratio of the aggregate means). Degenerate rows
    are excluded from the generalization ratio only."""
    out = []
    for obj in _objectives_in(rows):
        sub = [r for r in rows if r["objective"] == obj]
        oos = np.array([r["oos_return"] for r in sub])
        train = np.array([r["train_return"] for r in sub])
        live = [r for r in sub if not r["degenerate"]]
        if live:
            oos_live = np.array([r["oos_return"] for r in live])
            train_live = np.array([r["train_return"] for r in live])
            gen = generalization_ratio(float(oos_live.mean()),
                                       float(train_live.mean()))
        else:
            gen = math.nan
        out.append({
            "objective": obj,
            "val_mean": float(oos.mean()),
            "val_std": float(oos.std()),
            "train_mean": float(train.mean()),
            "gen_ratio": gen,
            "n": len(sub),
        })
    return out


def aggregate_by_split(rows: list[dict]) -> list[dict]:
    """Per-split, per-objective aggregate generalization ratios."""
    out = []
    for split_id in sorted({r["split_id"] for r in rows}):
        for agg in aggregate_by_objective(
                [r for r in rows if r["split_id"] == split_id]):
            agg = {"split_id": split_id, **agg}
            out.append(agg)
    return out


def aggregate_by_period(rows: list[dict]) -> list[dict]:
    """Per-split validation means: composite vs the baseline average, with
    the difference in percentage points."""
    out = []
    for split_id in sorted({r["split_id"] for r in rows}):
        sub = [r for r in rows if r["split_id"] == split_id]
        gt = [r["oos_return"] for r in sub
              if r["objective"] == ObjectiveKind.GT_SCORE.value]
        base = [r["oos_return"] for r in sub
                if r["objective"] in {b.value for b in BASELINES}]
        gt_mean = float(np.mean(gt)) if gt else math.nan
        base_mean = float(np.mean(base)) if base else math.nan
        out.append({
            "split_id": split_id,
            "gt_score_mean": gt_mean,
            "baseline_avg": base_mean,
            "delta_pp": (gt_mean - base_mean) * 100.0,
        })
    return out


def aggregate_by_strategy(rows: list[dict]) -> list[dict]:
    """Mean out-of-sample return per strategy x objective."""
    out = []
    for strat in sorted({r["strategy"] for r in rows}):
        entry = {"strategy": strat}
        for obj in _objectives_in(rows):
            vals = [r["oos_return"] for r in rows
                    if r["strategy"] == strat and r["objective"] == obj]
            entry[obj] = float(np.mean(vals)) if vals else math.nan
        out.append(entry)
    return out


def mean_trade_counts(rows: list[dict]) -> list[dict]:
    """Mean out-of-sample trade count per objective."""
    return [{
        "objective": obj,
        "mean_oos_trades": float(np.mean(
            [r["oos_trades"] for r in rows if r["objective"] == obj])),
    } for obj in _objectives_in(rows)]


def paired_oos_returns(rows: list[dict], obj_a: str,
                       obj_b: str) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-sample returns of two objectives aligned on the full trial
    key (asset, strategy, split, seed)."""
    def key(r):
        return (r["asset"], r["strategy"], r["split_id"], r["seed"])
    a_by_key = {key(r): r["oos_return"] for r in rows if r["objective"] == obj_a}
    b_by_key = {key(r): r["oos_return"] for r in rows if r["objective"] == obj_b}
    common = sorted(set(a_by_key) & set(b_by_key))
    if len(common) != len(a_by_key) or len(common) != len(b_by_key):
        raise DataError(f"unpaired trials between {obj_a} and {obj_b}")
    return (np.array([a_by_key[k] for k in common]),
            np.array([b_by_key[k] for k in common]))


def _objectives_in(rows: list[dict]) -> list[str]:
    order = [k.value for k in ObjectiveKind]
    present = {r["objective"] for r in rows}
    return [o for o in order if o in present]
