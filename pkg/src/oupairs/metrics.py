"""Performance metrics and plot-ready report files.

Seven headline numbers per run: annualized expected return and volatility,
Sharpe, Sortino, maximum drawdown, daily 95% VaR and win ratio, plus the
inter-pair correlation matrix. Conventions: 252 periods/year, sample sd with
n-1, VaR as the linear-interpolated empirical 5th percentile, Sortino
downside deviation against a zero daily target. The risk-free rate defaults
to 1% annually and is recorded alongside every report.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .backtest import BacktestResult
from .errors import DataError, DegenerateSeriesError, UndefinedMetricError

logger = logging.getLogger(__name__)

METRIC_LABELS = (
    ("Expected Return (Annualized)", "expected_return_ann"),
    ("Volatility (Annualized)", "volatility_ann"),
    ("Sharpe Ratio", "sharpe"),
    ("Sortino Ratio", "sortino"),
    ("Maximum Drawdown", "max_drawdown"),
    ("VaR (95%)", "var_95"),
    ("Win-Ratio", "win_ratio"),
)


@dataclass(frozen=True)
class MetricsRecord:
    expected_return_ann: float
    volatility_ann: float
    sharpe: float | None
    sortino: float | None
    max_drawdown: float
    var_95: float
    win_ratio: float


def compute_metrics(
    daily,
    rf_annual: float = 0.01,
    periods_per_year: int = 252,
    strict: bool = True,
) -> MetricsRecord:
    """Metrics record from a daily return series.

    strict=True raises UndefinedMetricError when a ratio denominator is zero
    (zero volatility or zero downside deviation); strict=False reports the
    ratio as None so a degenerate run still produces a report.
    """
    d = np.asarray(daily, dtype=float)
    if d.size < 30:
        raise DegenerateSeriesError(f"need at least 30 daily returns, got {d.size}")
    if not np.isfinite(d).all():
        raise DataError("daily returns contain non-finite values")

    er = float(d.mean() * periods_per_year)
    vol = float(d.std(ddof=1) * math.sqrt(periods_per_year))
    excess = er - rf_annual

    if vol > 0:
        sharpe = excess / vol
    elif strict:
        raise UndefinedMetricError("zero volatility; Sharpe undefined")
    else:
        sharpe = None

    downside = float(np.sqrt(np.mean(np.minimum(d, 0.0) ** 2)) * math.sqrt(periods_per_year))
    if downside > 0:
        sortino = excess / downside
    elif strict:
        raise UndefinedMetricError("zero downside deviation; Sortino undefined")
    else:
        sortino = None

    equity = np.cumprod(1.0 + d)
    peak = np.maximum.accumulate(equity)
    max_dd = float(np.min(equity / peak - 1.0))

    return MetricsRecord(
        expected_return_ann=er,
        volatility_ann=vol,
        sharpe=sharpe,
        sortino=sortino,
        max_drawdown=max_dd,
        var_95=float(np.percentile(d, 5.0)),
        win_ratio=float(np.mean(d > 0)),
    )


def correlation_matrix(per_pair_returns: np.ndarray) -> np.ndarray:
    """Pearson correlations between pair return columns.

    Diagonal is exactly 1 and the matrix exactly symmetric; columns with zero
    variance get NaN off-diagonal entries as undefined markers.
    """
    X = np.asarray(per_pair_returns, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DegenerateSeriesError("correlation matrix needs at least 2 pairs")
    if X.shape[0] < 30:
        raise DegenerateSeriesError(f"need at least 30 common dates, got {X.shape[0]}")
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    p = X.shape[1]
    corr = np.full((p, p), np.nan)
    np.fill_diagonal(corr, 1.0)
    for i in range(p):
        for j in range(i + 1, p):
            if norms[i] > 0 and norms[j] > 0:
                value = float(centered[:, i] @ centered[:, j] / (norms[i] * norms[j]))
                corr[i, j] = corr[j, i] = value
    return corr


def _fmt(value: float | None) -> str:
    return "null" if value is None else f"{value:.6f}"


def metrics_json_text(metrics: MetricsRecord, conventions: dict) -> str:
    """Flat JSON with the report labels in table order, floats at 6 decimals."""
    lines = ["{"]
    for label, attr in METRIC_LABELS:
        lines.append(f'  "{label}": {_fmt(getattr(metrics, attr))},')
    lines.append(f'  "_conventions": {json.dumps(conventions, sort_keys=True)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def freedman_diaconis_bins(d: np.ndarray) -> tuple[int, float]:
    """(bin count, bin width) for the daily-return histogram."""
    q75, q25 = np.percentile(d, [75.0, 25.0])
    width = 2.0 * (q75 - q25) * d.size ** (-1.0 / 3.0)
    span = float(d.max() - d.min())
    if width <= 0 or span <= 0:
        return 1, span
    n_bins = int(min(max(math.ceil(span / width), 1), 10_000))
    return n_bins, span / n_bins


def emit_report(
    result: BacktestResult,
    metrics: MetricsRecord,
    out_dir: str,
    rf_annual: float = 0.01,
    periods_per_year: int = 252,
) -> list[str]:
    """Write the metrics JSON, cumulative-return series, daily-return
    histogram, and (for >= 2 pairs) the correlation matrix. Returns the paths
    written. All floats carry 6 decimal places."""
    tag = result.strategy_tag
    daily = result.portfolio_returns
    written: list[str] = []

    flags = []
    if metrics.sharpe is None:
        flags.append("sharpe undefined: zero volatility")
    if metrics.sortino is None:
        flags.append("sortino undefined: zero downside deviation")
    conventions = {
        "rf_annual": rf_annual,
        "periods_per_year": periods_per_year,
        "sortino_downside_target": "zero daily return",
        "var_95": "linear-interpolated 5th percentile of daily returns",
        "flags": flags,
    }

    def _write(name: str, text: str) -> None:
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataError(f"cannot write report file {path}: {exc}") from exc
        written.append(path)

    _write(f"{tag}_metrics.json", metrics_json_text(metrics, conventions))

    cum = np.cumprod(1.0 + daily) - 1.0
    rows = ["date,daily_return,cumulative_return"]
    for t, d in enumerate(result.dates):
        rows.append(f"{d.isoformat()},{daily[t]:.6f},{cum[t]:.6f}")
    _write(f"{tag}_cumulative_returns.csv", "\n".join(rows) + "\n")

    n_bins, bin_width = freedman_diaconis_bins(daily)
    counts, edges = np.histogram(daily, bins=n_bins)
    rows = [
        f"# bin_width={bin_width:.6f} rule=freedman-diaconis",
        "bin_left,bin_right,count",
    ]
    for k in range(counts.size):
        rows.append(f"{edges[k]:.6f},{edges[k + 1]:.6f},{counts[k]}")
    _write(f"{tag}_histogram.csv", "\n".join(rows) + "\n")

    if result.per_pair_returns.shape[1] >= 2 and result.per_pair_returns.shape[0] >= 30:
        corr = correlation_matrix(result.per_pair_returns)
        rows = ["pair," + ",".join(result.pair_labels)]
        for i, label in enumerate(result.pair_labels):
            rows.append(label + "," + ",".join(f"{corr[i, j]:.6f}" for j in range(corr.shape[1])))
        _write(f"{tag}_correlation_matrix.csv", "\n".join(rows) + "\n")
    else:
        logger.info("%s: correlation matrix skipped (needs >= 2 pairs, 30 dates)", tag)

    return written
