"""Command-line interface: dataset management, studies, reports.

Every aggregate file is recomputable from the trial-level CSV next to it;
`gtscore verify` re-derives them and fails on any byte difference.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import search
from .data import (
    generate_synthetic_series,
    load_synthetic_manifest,
    parse_ohlcv_csv,
    to_ohlcv_csv,
)
from .engine import recompound_with_costs
from .errors import ConfigError, DataError, GtscoreError, InternalCheckError
from .objective import ObjectiveConfig, ObjectiveKind
from .search import TrialResult
from .stats import compare_paired
from .strategy import StrategyKind, params_to_json

logger = logging.getLogger(__name__)

DEFAULT_COST_SWEEP = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]

TRIAL_COLUMNS = [
    "asset", "strategy", "objective", "split_id", "seed",
    "train_return", "oos_return", "train_trades", "oos_trades",
    "best_loss", "degenerate", "params_json", "candidates_json",
    "oos_trade_returns_json",
]


@dataclass
class WalkforwardConfig:
    train_years: int = 4
    val_years: int = 2
    step_years: int = 1
    embargo_days: int = 30


@dataclass
class MonteCarloConfig:
    seeds: list[int] = field(default_factory=lambda: list(range(42, 57)))
    train_fraction: float = 0.7
    embargo_days: int = 30


@dataclass
class RunConfig:
    data_dir: str = "data"
    assets: list[str] = field(default_factory=list)
    strategies: list[str] = field(
        default_factory=lambda: [k.value for k in StrategyKind])
    objectives: list[str] = field(
        default_factory=lambda: [k.value for k in ObjectiveKind])
    wf: WalkforwardConfig = field(default_factory=WalkforwardConfig)
    mc: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    budget: int = 25
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    cost_sweep_bps: list[float] = field(
        default_factory=lambda: list(DEFAULT_COST_SWEEP))
    out_dir: str = "out"

    def to_json(self) -> dict:
        return {
            "data_dir": self.data_dir,
            "assets": list(self.assets),
            "strategies": list(self.strategies),
            "objectives": list(self.objectives),
            "wf": vars(self.wf).copy(),
            "mc": vars(self.mc).copy(),
            "budget": self.budget,
            "objective": self.objective.to_json(),
            "cost_sweep_bps": list(self.cost_sweep_bps),
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RunConfig":
        try:
            kwargs = dict(doc)
            if "wf" in kwargs:
                kwargs["wf"] = WalkforwardConfig(**kwargs["wf"])
            if "mc" in kwargs:
                kwargs["mc"] = MonteCarloConfig(**kwargs["mc"])
            if "objective" in kwargs:
                kwargs["objective"] = ObjectiveConfig.from_json(
                    kwargs["objective"])
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad run config: {exc}") from exc


def load_config(path: str) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return RunConfig.from_json(doc)


def parse_seed_range(text: str) -> list[int]:
    """Parse 'a..b' (inclusive) into a seed list."""
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad seed range {text!r}, expected a..b") from None
    if hi < lo:
        raise ConfigError(f"empty seed range {text!r}")
    return list(range(lo, hi + 1))


# --- CSV plumbing ----------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def trial_row(result: TrialResult) -> dict:
    spec = result.spec
    return {
        "asset": spec.asset_id,
        "strategy": spec.strategy_kind.value,
        "objective": spec.objective_kind.value,
        "split_id": spec.split_id,
        "seed": spec.seed,
        "train_return": result.train_total_return,
        "oos_return": result.oos_total_return,
        "train_trades": result.train_n_trades,
        "oos_trades": result.oos_n_trades,
        "best_loss": result.best_loss,
        "degenerate": result.degenerate,
        "params_json": params_to_json(result.best_params),
        "candidates_json": json.dumps(
            [json.loads(params_to_json(p)) for p in result.candidates],
            sort_keys=True),
        "oos_trade_returns_json": json.dumps(
            [repr(float(r)) for r in result.oos_trade_returns]),
    }


def read_trials_csv(path: Path) -> list[dict]:
    if not path.exists():
        raise DataError(f"missing trials file: {path}")
    with path.open() as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            rows.append({
                "asset": raw["asset"],
                "strategy": raw["strategy"],
                "objective": raw["objective"],
                "split_id": int(raw["split_id"]),
                "seed": int(raw["seed"]),
                "train_return": float(raw["train_return"]),
                "oos_return": float(raw["oos_return"]),
                "train_trades": int(raw["train_trades"]),
                "oos_trades": int(raw["oos_trades"]),
                "best_loss": float(raw["best_loss"]),
                "degenerate": raw["degenerate"] == "true",
                "params_json": raw["params_json"],
                "candidates_json": raw["candidates_json"],
                "oos_trade_returns_json": raw["oos_trade_returns_json"],
            })
    return rows


def trade_returns_from_row(row: dict) -> np.ndarray:
    return np.array([float(x) for x in json.loads(row["oos_trade_returns_json"])])


# --- derived-file builders (shared by run and verify) ----------------------

AGG_COLUMNS = ["objective", "val_mean", "val_std", "train_mean", "gen_ratio", "n"]
SPLIT_COLUMNS = ["split_id", "objective", "val_mean", "val_std", "train_mean",
                 "gen_ratio", "n"]
PERIOD_COLUMNS = ["split_id", "gt_score_mean", "baseline_avg", "delta_pp"]
STRATEGY_COLUMNS_BASE = ["strategy"]
COMPARISON_COLUMNS = ["comparison", "mean_diff", "t_stat", "p_value_t",
                      "wilcoxon_stat", "wilcoxon_p", "cohens_d", "n"]
TRADECOUNT_COLUMNS = ["objective", "mean_oos_trades"]
COST_COLUMNS_BASE = ["objective"]


def derive_walkforward_files(rows: list[dict]) -> dict[str, tuple[list[str], list[dict]]]:
    return {
        "aggregates.csv": (AGG_COLUMNS, search.aggregate_by_objective(rows)),
        "periods.csv": (PERIOD_COLUMNS, search.aggregate_by_period(rows)),
        "splits_genratio.csv": (SPLIT_COLUMNS, search.aggregate_by_split(rows)),
    }


def derive_montecarlo_files(rows: list[dict]) -> dict[str, tuple[list[str], list[dict]]]:
    strat_rows = search.aggregate_by_strategy(rows)
    strat_cols = STRATEGY_COLUMNS_BASE + [
        c for c in (k.value for k in ObjectiveKind)
        if strat_rows and c in strat_rows[0]]
    comparisons = []
    objectives = {r["objective"] for r in rows}
    if ObjectiveKind.GT_SCORE.value in objectives:
        for baseline in search.BASELINES:
            if baseline.value not in objectives:
                continue
            a, b = search.paired_oos_returns(rows, ObjectiveKind.GT_SCORE.value,
                                             baseline.value)
            cmp = compare_paired(f"gt_score_vs_{baseline.value}", a, b)
            comparisons.append({
                "comparison": cmp.name, "mean_diff": cmp.mean_diff,
                "t_stat": cmp.t_stat, "p_value_t": cmp.p_value_t,
                "wilcoxon_stat": cmp.wilcoxon_stat,
                "wilcoxon_p": cmp.wilcoxon_p,
                "cohens_d": cmp.cohens_d, "n": cmp.n,
            })
    return {
        "aggregates.csv": (AGG_COLUMNS, search.aggregate_by_objective(rows)),
        "strategy_means.csv": (strat_cols, strat_rows),
        "comparisons.csv": (COMPARISON_COLUMNS, comparisons),
        "trade_counts.csv": (TRADECOUNT_COLUMNS, search.mean_trade_counts(rows)),
    }


def derive_cost_sensitivity(rows: list[dict],
                            sweep: list[float]) -> tuple[list[str], list[dict]]:
    cols = COST_COLUMNS_BASE + [f"bps_{_bps_label(b)}" for b in sweep]
    out = []
    for obj in [k.value for k in ObjectiveKind
                if k.value in {r["objective"] for r in rows}]:
        sub = [r for r in rows if r["objective"] == obj]
        entry = {"objective": obj}
        for bps in sweep:
            vals = [recompound_with_costs(trade_returns_from_row(r), bps)
                    for r in sub]
            entry[f"bps_{_bps_label(bps)}"] = float(np.mean(vals))
        out.append(entry)
    return cols, out


def _bps_label(bps: float) -> str:
    return str(int(bps)) if float(bps).is_integer() else str(bps)


# --- subcommands ------------------------------------------------------------


def _load_assets(cfg: RunConfig) -> list:
    data_dir = Path(cfg.data_dir)
    assets = []
    ids = cfg.assets or sorted(p.stem for p in data_dir.glob("*.csv"))
    if not ids:
        raise DataError(f"no assets configured and no CSVs in {data_dir}")
    for asset_id in ids:
        path = data_dir / f"{asset_id}.csv"
        if not path.exists():
            raise DataError(f"missing data file {path}")
        assets.append(parse_ohlcv_csv(path.read_text(), asset_id))
    return assets


def cmd_config_init(args) -> int:
    doc = json.dumps(RunConfig().to_json(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(doc)
        print(f"wrote {args.out}")
    else:
        print(doc, end="")
    return 0


def cmd_synth(args) -> int:
    manifest = load_synthetic_manifest(Path(args.spec).read_text())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for asset_id, spec in manifest:
        series = generate_synthetic_series(spec, asset_id)
        (out_dir / f"{asset_id}.csv").write_text(to_ohlcv_csv(series))
        print(f"wrote {out_dir / (asset_id + '.csv')} ({len(series)} bars)")
    return 0


def _prepare_out(cfg: RunConfig, override: str | None) -> Path:
    out_dir = Path(override or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def cmd_walkforward(args) -> int:
    cfg = load_config(args.config)
    out_dir = _prepare_out(cfg, args.out)
    assets = _load_assets(cfg)
    results = search.run_walkforward(
        assets,
        [StrategyKind(s) for s in cfg.strategies],
        [ObjectiveKind(o) for o in cfg.objectives],
        cfg.objective, jobs=args.jobs,
        train_years=cfg.wf.train_years, val_years=cfg.wf.val_years,
        step_years=cfg.wf.step_years, embargo_days=cfg.wf.embargo_days,
        budget=cfg.budget)
    rows = [trial_row(r) for r in results]
    write_csv(out_dir / "trials.csv", TRIAL_COLUMNS, rows)
    for name, (cols, data) in derive_walkforward_files(rows).items():
        write_csv(out_dir / name, cols, data)
    print(f"walkforward: {len(rows)} trials -> {out_dir}")
    return 0


def cmd_montecarlo(args) -> int:
    cfg = load_config(args.config)
    out_dir = _prepare_out(cfg, args.out)
    assets = _load_assets(cfg)
    seeds = parse_seed_range(args.seed_range) if args.seed_range else cfg.mc.seeds
    results = search.run_montecarlo(
        assets,
        [StrategyKind(s) for s in cfg.strategies],
        [ObjectiveKind(o) for o in cfg.objectives],
        seeds, cfg.objective, jobs=args.jobs,
        train_fraction=cfg.mc.train_fraction,
        embargo_days=cfg.mc.embargo_days, budget=cfg.budget)
    rows = [trial_row(r) for r in results]
    write_csv(out_dir / "trials.csv", TRIAL_COLUMNS, rows)
    for name, (cols, data) in derive_montecarlo_files(rows).items():
        write_csv(out_dir / name, cols, data)
    print(f"montecarlo: {len(rows)} trials -> {out_dir}")
    return 0


def cmd_costsweep(args) -> int:
    rows = read_trials_csv(Path(args.trials))
    sweep = ([float(x) for x in args.bps.split(",")] if args.bps
             else DEFAULT_COST_SWEEP)
    cols, data = derive_cost_sensitivity(rows, sweep)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "cost_sensitivity.csv", cols, data)
    print(f"costsweep: {len(data)} objectives x {len(sweep)} levels -> {out_dir}")
    return 0


def _read_raw_csv(path: Path) -> tuple[list[str], list[dict]]:
    with path.open() as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


def _format_text_table(cols: list[str], rows: list[dict],
                       precision: int = 4) -> str:
    def fmt(v):
        try:
            f = float(v)
        except (TypeError, ValueError):
            return str(v)
        if f.is_integer() and abs(f) < 1e15:
            return str(int(f))
        return f"{f:.{precision}f}"
    table = [[fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in table)) if table else len(c)
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in table:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    if not out_dir.is_dir():
        raise DataError(f"output directory not found: {out_dir}")
    sections = []
    plot_files = {
        "aggregates.csv": ("Aggregate performance by objective",
                           "fig_genratio_bars.csv"),
        "splits_genratio.csv": ("Generalization ratio by split",
                                "fig_genratio_by_split.csv"),
        "periods.csv": ("Validation mean by period", None),
        "strategy_means.csv": ("Mean out-of-sample return by strategy", None),
        "comparisons.csv": ("Paired statistical comparisons", None),
        "trade_counts.csv": ("Mean out-of-sample trade counts", None),
        "cost_sensitivity.csv": ("Transaction-cost sensitivity",
                                 "fig_cost_curves.csv"),
    }
    found = False
    for name, (title, plot_name) in plot_files.items():
        path = out_dir / name
        if not path.exists():
            continue
        found = True
        cols, rows = _read_raw_csv(path)
        sections.append(f"{title}\n{_format_text_table(cols, rows)}")
        if plot_name:
            (out_dir / plot_name).write_text(path.read_text())
    if not found:
        raise DataError(f"no result CSVs found in {out_dir}")
    report = "\n\n".join(sections) + "\n"
    (out_dir / "report.txt").write_text(report)
    print(report, end="")
    return 0


def cmd_verify(args) -> int:
    out_dir = Path(args.out)
    rows = read_trials_csv(out_dir / "trials.csv")
    if (out_dir / "periods.csv").exists():
        derived = derive_walkforward_files(rows)
    else:
        derived = derive_montecarlo_files(rows)
    cost_path = out_dir / "cost_sensitivity.csv"
    if cost_path.exists():
        cols, _ = _read_raw_csv(cost_path)
        sweep = [float(c.removeprefix("bps_")) for c in cols[1:]]
        derived["cost_sensitivity.csv"] = derive_cost_sensitivity(rows, sweep)
    failures = []
    for name, (cols, data) in derived.items():
        path = out_dir / name
        if not path.exists():
            failures.append(f"{name}: missing")
            continue
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in data:
            writer.writerow([_cell(row[c]) for c in cols])
        if buf.getvalue() != path.read_text():
            failures.append(f"{name}: differs from recomputation")
        else:
            print(f"verify: {name} OK")
    if failures:
        raise InternalCheckError("; ".join(failures))
    print("verify: all aggregates recomputable from trials.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtscore",
        description="Backtesting and objective-function comparison engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="configuration helpers")
    csub = p.add_subparsers(dest="config_command", required=True)
    ci = csub.add_parser("init", help="emit a default run config")
    ci.add_argument("--out", help="write to file instead of stdout")
    ci.set_defaults(func=cmd_config_init)

    p = sub.add_parser("synth", help="generate synthetic OHLCV CSVs")
    p.add_argument("--spec", required=True, help="JSON manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    for name, func in [("walkforward", cmd_walkforward),
                       ("montecarlo", cmd_montecarlo)]:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="override config out_dir")
        p.add_argument("--jobs", type=int, default=1)
        if name == "montecarlo":
            p.add_argument("--seed-range", dest="seed_range",
                           help="inclusive range a..b overriding config seeds")
        p.set_defaults(func=func)

    p = sub.add_parser("costsweep", help="transaction-cost sensitivity")
    p.add_argument("--trials", required=True, help="montecarlo trials.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--bps", help="comma-separated per-side bps levels")
    p.set_defaults(func=cmd_costsweep)

    p = sub.add_parser("report", help="text summary + plot-ready data")
    p.add_argument("--out", required=True, help="study output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="recompute aggregates and diff")
    p.add_argument("--out", required=True, help="study output directory")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InternalCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GtscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
