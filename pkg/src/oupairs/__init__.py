"""oupairs: pairs-trading research engine.

Pipeline: file ingestion -> universe filter -> aligned price panel ->
MSD pair selection -> Engle-Granger validation -> OU spread calibration ->
percentile-threshold signals -> backtest -> performance metrics.
"""

__version__ = "0.1.0"

from .backtest import BacktestResult, pair_daily_return, run_backtest
from .market_data import (
    DateSplit,
    PricePanel,
    SecurityRecord,
    UniverseFilter,
    build_panel,
    filter_universe,
    load_records,
    split_panel,
)
from .metrics import MetricsRecord, compute_metrics, correlation_matrix, emit_report
from .ou_model import (
    OuParams,
    Spread,
    calibrate,
    fit_ar1,
    make_spread,
    ou_from_ar1,
    rolling_stats,
    simulate_ou,
    zscore,
)
from .pair_selection import PairCandidate, msd, select_pairs
from .stat_tests import OlsFit, TestResult, adf_test, engle_granger, ols_fit, validate_pairs
from .strategy import (
    PositionSeries,
    ThresholdConfig,
    generate_positions,
    rolling_percentile,
    zscore_series_baseline,
    zscore_series_ou,
)

__all__ = [
    "BacktestResult",
    "DateSplit",
    "MetricsRecord",
    "OlsFit",
    "OuParams",
    "PairCandidate",
    "PositionSeries",
    "PricePanel",
    "SecurityRecord",
    "Spread",
    "TestResult",
    "ThresholdConfig",
    "UniverseFilter",
    "__version__",
    "adf_test",
    "build_panel",
    "calibrate",
    "compute_metrics",
    "correlation_matrix",
    "emit_report",
    "engle_granger",
    "filter_universe",
    "fit_ar1",
    "generate_positions",
    "load_records",
    "make_spread",
    "msd",
    "ols_fit",
    "ou_from_ar1",
    "pair_daily_return",
    "rolling_percentile",
    "rolling_stats",
    "run_backtest",
    "select_pairs",
    "simulate_ou",
    "split_panel",
    "validate_pairs",
    "zscore",
    "zscore_series_baseline",
    "zscore_series_ou",
]
