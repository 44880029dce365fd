"""Command-line pipeline orchestration.

Each stage reads its inputs from and writes its outputs to the run
directory, so `run` is literally the stages composed in order and a stage
can be re-run standalone on a previous run's files. The manifest echoes the
effective configuration, per-stage counts and drop reasons; nothing in the
outputs depends on wall-clock time, so a rerun with the same config and seed
reproduces every file byte for byte.

Exit codes: 0 success, 1 config error, 2 data error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import date

import numpy as np

from . import __version__
from .backtest import BacktestResult, run_backtest
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, OuPairsError, PipelineError
from .market_data import (
    build_panel,
    dump_panel,
    filter_universe,
    load_panel,
    load_records,
    split_panel,
)
from .metrics import compute_metrics, emit_report
from .ou_model import calibrate, make_spread
from .pair_selection import dump_pair_table, load_pair_table, rank_all_pairs, select_pairs
from .stat_tests import validate_pairs
from .synth import generate_universe, write_price_file

logger = logging.getLogger(__name__)

FILES = {
    "panel_full": "panel_full.csv",
    "train_panel": "train_panel.csv",
    "test_panel": "test_panel.csv",
    "pairs_selected": "pairs_selected.csv",
    "pairs_ranked": "pairs_ranked_full.csv",
    "pairs_validated": "pairs_validated.csv",
    "ou_params": "ou_params.csv",
    "manifest": "run_manifest.json",
}

OU_PARAMS_COLUMNS = [
    "sec_i", "sec_j", "a", "b", "sd_eps", "lambda", "mu", "sigma", "delta",
    "half_life", "status", "reason",
]


def _path(out_dir: str, key: str) -> str:
    return os.path.join(out_dir, FILES[key])


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------

def stage_ingest(cfg: RunConfig, out_dir: str) -> dict:
    records = load_records(cfg.prices_file, lenient=cfg.lenient_parse)
    filtered = filter_universe(records, cfg.universe_filter())
    if not filtered:
        raise DataError("universe filter removed every record")
    panel = build_panel(filtered, cfg.min_coverage, cfg.ffill_limit, cfg.min_active_frac)
    train, test = split_panel(panel, cfg.date_split())
    dump_panel(panel, _path(out_dir, "panel_full"))
    dump_panel(train, _path(out_dir, "train_panel"))
    dump_panel(test, _path(out_dir, "test_panel"))
    return {
        "records_loaded": len(records),
        "records_after_filter": len(filtered),
        "securities_in_panel": panel.n_securities,
        "securities_dropped": panel.dropped,
        "forward_fills": panel.fill_counts,
        "panel_dates": panel.n_dates,
        "train_dates": train.n_dates,
        "test_dates": test.n_dates,
    }


def stage_select_pairs(cfg: RunConfig, out_dir: str, full_table: bool = False) -> dict:
    train = load_panel(_path(out_dir, "train_panel"))
    ranked = rank_all_pairs(train)
    if full_table:
        dump_pair_table(ranked, _path(out_dir, "pairs_ranked"))
    selected = select_pairs(train, cfg.max_pairs)
    dump_pair_table(selected, _path(out_dir, "pairs_selected"))
    return {"pairs_scored": len(ranked), "pairs_selected": len(selected)}


def stage_validate_pairs(cfg: RunConfig, out_dir: str) -> dict:
    train = load_panel(_path(out_dir, "train_panel"))
    pairs = load_pair_table(_path(out_dir, "pairs_selected"))
    validated = validate_pairs(pairs, train, cfg.alpha, cfg.cointegrate_on)
    dump_pair_table(validated, _path(out_dir, "pairs_validated"))
    n_retained = sum(p.retained for p in validated)
    counts = {
        "pairs_retained": n_retained,
        "pairs_rejected": [
            [p.label, p.fail_reason or f"p_value {p.p_value:.4f} >= alpha"]
            for p in validated
            if not p.retained
        ],
    }
    if n_retained == 0:
        raise PipelineError(f"no retained pairs at alpha={cfg.alpha}")
    return counts


def stage_calibrate(cfg: RunConfig, out_dir: str) -> dict:
    train = load_panel(_path(out_dir, "train_panel"))
    pairs = [p for p in load_pair_table(_path(out_dir, "pairs_validated")) if p.retained]
    rows = []
    n_ok = 0
    dropped = []
    for pair in pairs:
        try:
            params = calibrate(make_spread(train, pair), cfg.delta)
        except OuPairsError as exc:
            dropped.append([pair.label, str(exc)])
            rows.append([pair.sec_i, pair.sec_j] + [""] * 8 + ["dropped", str(exc)])
            continue
        n_ok += 1
        rows.append([
            pair.sec_i, pair.sec_j,
            repr(params.a), repr(params.b), repr(params.sd_eps),
            repr(params.lam), repr(params.mu), repr(params.sigma),
            repr(params.delta), repr(params.half_life),
            "ok", "",
        ])
    with open(_path(out_dir, "ou_params"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OU_PARAMS_COLUMNS)
        writer.writerows(rows)
    for label, reason in dropped:
        logger.warning("calibration dropped %s: %s", label, reason)
    return {"pairs_calibrated": n_ok, "calibration_dropped": dropped}


def load_ou_params(path: str):
    from .ou_model import OuParams

    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open OU parameter file {path}: {exc}") from exc
    trained = {}
    with fh:
        for row in csv.DictReader(fh):
            if row["status"] != "ok":
                continue
            trained[(row["sec_i"], row["sec_j"])] = OuParams.from_ar1(
                a=float(row["a"]),
                b=float(row["b"]),
                sd_eps=float(row["sd_eps"]),
                delta=float(row["delta"]),
            )
    return trained


def stage_backtest(cfg: RunConfig, out_dir: str, strategy: str) -> dict:
    test = load_panel(_path(out_dir, "test_panel"))
    pairs = [p for p in load_pair_table(_path(out_dir, "pairs_validated")) if p.retained]
    trained = None
    if strategy == "ou" and cfg.ou_refit_window == 0:
        trained = load_ou_params(_path(out_dir, "ou_params"))
    result = run_backtest(
        test, pairs, strategy, cfg.threshold_config(),
        trained=trained, ou_refit_window=cfg.ou_refit_window,
    )
    _write_series_csv(
        os.path.join(out_dir, f"{strategy}_portfolio_returns.csv"),
        result.dates, ["return"], result.portfolio_returns[:, None],
    )
    _write_series_csv(
        os.path.join(out_dir, f"{strategy}_pair_returns.csv"),
        result.dates, result.pair_labels, result.per_pair_returns,
    )
    _write_series_csv(
        os.path.join(out_dir, f"{strategy}_positions.csv"),
        result.dates, result.pair_labels, result.positions, integer=True,
    )
    return {
        f"{strategy}_pairs_included": len(result.pair_labels),
        f"{strategy}_pairs_skipped": [list(s) for s in result.skipped],
    }


def stage_report(cfg: RunConfig, out_dir: str, strategy: str) -> dict:
    dates, labels, per_pair = _read_series_csv(os.path.join(out_dir, f"{strategy}_pair_returns.csv"))
    _, _, portfolio = _read_series_csv(os.path.join(out_dir, f"{strategy}_portfolio_returns.csv"))
    _, _, positions = _read_series_csv(os.path.join(out_dir, f"{strategy}_positions.csv"))
    result = BacktestResult(
        dates=dates,
        pair_labels=labels,
        per_pair_returns=per_pair,
        portfolio_returns=portfolio[:, 0],
        positions=positions.astype(np.int8),
        strategy_tag=strategy,
    )
    record = compute_metrics(
        result.portfolio_returns, cfg.rf_annual, cfg.periods_per_year, strict=False
    )
    written = emit_report(result, record, out_dir, cfg.rf_annual, cfg.periods_per_year)
    return {f"{strategy}_report_files": [os.path.basename(p) for p in written]}


def _write_series_csv(path, dates, labels, matrix, integer=False):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *labels])
        for t, d in enumerate(dates):
            row = matrix[t]
            writer.writerow(
                [d.isoformat(), *(str(int(x)) if integer else repr(float(x)) for x in row)]
            )


def _read_series_csv(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open series file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date":
            raise DataError(f"{path} is not a series file")
        labels = header[1:]
        dates, rows = [], []
        for row in reader:
            dates.append(date.fromisoformat(row[0]))
            rows.append([float(x) for x in row[1:]])
    if not rows:
        raise DataError(f"series file {path} is empty")
    return dates, labels, np.array(rows)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(cfg: RunConfig, full_table: bool = False) -> int:
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    counts: dict = {}
    stages = [
        ("ingest", lambda: stage_ingest(cfg, out_dir)),
        ("select-pairs", lambda: stage_select_pairs(cfg, out_dir, full_table)),
        ("validate-pairs", lambda: stage_validate_pairs(cfg, out_dir)),
        ("calibrate", lambda: stage_calibrate(cfg, out_dir)),
    ]
    for strategy in cfg.strategies():
        stages.append((f"backtest[{strategy}]", lambda s=strategy: stage_backtest(cfg, out_dir, s)))
        stages.append((f"report[{strategy}]", lambda s=strategy: stage_report(cfg, out_dir, s)))

    for name, fn in stages:
        logger.info("stage %s", name)
        try:
            counts.update(fn())
        except Exception as exc:
            marker = os.path.join(out_dir, "RUN_FAILED.txt")
            with open(marker, "w", encoding="utf-8") as fh:
                fh.write(f"stage: {name}\ncause: {exc}\n")
            logger.error("stage %s failed: %s", name, exc)
            raise

    failed_marker = os.path.join(out_dir, "RUN_FAILED.txt")
    if os.path.exists(failed_marker):
        os.remove(failed_marker)
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "counts": counts,
    }
    with open(_path(out_dir, "manifest"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    logger.info("run complete; outputs in %s", out_dir)
    return 0


def cmd_synth(args) -> int:
    rows, truths = generate_universe(
        n_pairs=args.pairs,
        n_days=args.days,
        seed=args.seed,
        n_decoys=args.decoys,
        lam_per_year_range=(args.lambda_min, args.lambda_max),
        spread_sd_range=(args.spread_sd_min, args.spread_sd_max),
        start=date.fromisoformat(args.start_date),
    )
    write_price_file(args.out, rows)
    n_secs = 2 * args.pairs + args.decoys
    logger.info(
        "wrote %d rows (%d securities x %d days) to %s",
        len(rows), n_secs, args.days, args.out,
    )
    print(f"{args.out}: {n_secs} securities, {args.days} days, seed {args.seed}")
    for t in truths:
        logger.info(
            "pair %s/%s: lambda=%.2f/yr mu=%.3f stationary_sd=%.3f",
            t.ticker_a, t.ticker_b, t.lam_per_year, t.mu, t.stationary_sd,
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 (config error), not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_config_args(p, with_overrides=True):
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    if with_overrides:
        p.add_argument("--seed", type=int)
        p.add_argument("--strategy", choices=("baseline", "ou", "both"))
        p.add_argument("--max-pairs", type=int, dest="max_pairs")
        p.add_argument("--alpha", type=float)
        p.add_argument("--upper-pct", type=float, dest="upper_pct")
        p.add_argument("--lower-pct", type=float, dest="lower_pct")
        p.add_argument("--exit-pct", type=float, dest="exit_pct")


def _config_from_args(args) -> RunConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in ("seed", "strategy", "max_pairs", "alpha", "upper_pct", "lower_pct", "exit_pct")
    }
    overrides["out_dir"] = getattr(args, "out", None)
    return load_config(args.config, overrides)


def build_parser() -> _Parser:
    parser = _Parser(prog="oupairs", description="Pairs-trading research pipeline")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the full pipeline", parents=[])
    _add_config_args(p)
    p.add_argument("--full-table", action="store_true", help="also dump the full ranked pair table")

    p = sub.add_parser("synth", help="generate a synthetic price file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--days", type=int, default=750)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoys", type=int, default=2)
    p.add_argument("--lambda-min", type=float, default=12.0, dest="lambda_min")
    p.add_argument("--lambda-max", type=float, default=30.0, dest="lambda_max")
    p.add_argument("--spread-sd-min", type=float, default=1.0, dest="spread_sd_min")
    p.add_argument("--spread-sd-max", type=float, default=2.5, dest="spread_sd_max")
    p.add_argument("--start-date", default="2018-01-02", dest="start_date")

    for name, help_text in (
        ("ingest", "load, filter, build and split the panel"),
        ("select-pairs", "rank MSDs and select disjoint pairs"),
        ("validate-pairs", "Engle-Granger validation of selected pairs"),
        ("calibrate", "fit OU parameters on training spreads"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_args(p)
        if name == "select-pairs":
            p.add_argument("--full-table", action="store_true")

    for name in ("backtest", "report"):
        p = sub.add_parser(name, help=f"{name} stage (per strategy)")
        _add_config_args(p)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        if args.command == "synth":
            return cmd_synth(args)

        cfg = _config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg, full_table=args.full_table)

        os.makedirs(cfg.out_dir, exist_ok=True)
        if args.command == "ingest":
            counts = stage_ingest(cfg, cfg.out_dir)
        elif args.command == "select-pairs":
            counts = stage_select_pairs(cfg, cfg.out_dir, args.full_table)
        elif args.command == "validate-pairs":
            counts = stage_validate_pairs(cfg, cfg.out_dir)
        elif args.command == "calibrate":
            counts = stage_calibrate(cfg, cfg.out_dir)
        elif args.command == "backtest":
            counts = {}
            for strategy in cfg.strategies():
                counts.update(stage_backtest(cfg, cfg.out_dir, strategy))
        elif args.command == "report":
            counts = {}
            for strategy in cfg.strategies():
                counts.update(stage_report(cfg, cfg.out_dir, strategy))
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command}")
        print(json.dumps(counts, indent=2))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OuPairsError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
