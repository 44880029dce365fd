"""Position series to daily P&L over the test window.

Accounting convention: dollar-neutral unit-gross legs, so an active pair
earns position * (R_i - R_j) / 2 on each day it is held, with no compounding
inside the pair. The portfolio is the equal-weight mean across all included
pairs, flat pairs contributing zero. No transaction costs by default,
matching the modelled frictionless setting; cost_per_trade is a hook.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import PipelineError
from .market_data import PricePanel
from .ou_model import OuParams, make_spread
from .pair_selection import PairCandidate
from .strategy import (
    PositionSeries,
    ThresholdConfig,
    generate_positions,
    rolling_percentile,
    zscore_series_baseline,
    zscore_series_ou,
    zscore_series_ou_rolling,
)

logger = logging.getLogger(__name__)

STRATEGY_TAGS = ("baseline", "ou")


@dataclass
class BacktestResult:
    dates: list
    pair_labels: list[str]
    per_pair_returns: np.ndarray  # dates x pairs
    portfolio_returns: np.ndarray
    positions: np.ndarray  # dates x pairs, int8
    strategy_tag: str
    skipped: list[tuple[str, str]] = field(default_factory=list)
    # per pair label: columns spread, zscore, percentile (for signal dumps)
    signals: dict[str, np.ndarray] = field(default_factory=dict)


def pair_daily_return(
    position: PositionSeries,
    panel: PricePanel,
    pair: PairCandidate,
    cost_per_trade: float = 0.0,
) -> np.ndarray:
    """r[t] = position[t] * (R_i[t] - R_j[t]) / 2 on the panel dates.

    A missing return on an active day counts as zero with a warning; flat
    days are exactly zero. cost_per_trade (fraction of gross notional per
    unit position change) is charged on the day a change takes effect.
    """
    if len(position.position) != panel.n_dates:
        raise ValueError("position series not aligned to panel dates")
    ri = panel.return_column(pair.sec_i)
    rj = panel.return_column(pair.sec_j)
    pos = position.position.astype(float)
    leg = (ri - rj) / 2.0
    active_missing = (pos != 0) & ~np.isfinite(leg)
    if active_missing.any():
        logger.warning(
            "pair %s: %d active day(s) with missing returns treated as 0",
            pair.label, int(active_missing.sum()),
        )
    leg = np.where(np.isfinite(leg), leg, 0.0)
    r = pos * leg
    if cost_per_trade:
        turns = np.abs(np.diff(pos, prepend=0.0))
        r = r - cost_per_trade * turns
    return r


def run_backtest(
    test: PricePanel,
    pairs: list[PairCandidate],
    strategy: str,
    cfg: ThresholdConfig,
    trained: dict[tuple[str, str], OuParams] | None = None,
    ou_refit_window: int = 0,
    cost_per_trade: float = 0.0,
) -> BacktestResult:
    """Signals -> positions -> returns for every includable pair.

    strategy 'baseline' uses rolling 30-day spread statistics; 'ou' uses the
    trained parameters (pairs without a calibration are skipped with a
    reason) or, when ou_refit_window > 0, a trailing rolling refit.
    """
    if strategy not in STRATEGY_TAGS:
        raise ValueError(f"strategy must be one of {STRATEGY_TAGS}, got {strategy!r}")
    if not pairs:
        raise PipelineError("backtest received no pairs")
    trained = trained or {}

    labels: list[str] = []
    return_cols: list[np.ndarray] = []
    position_cols: list[np.ndarray] = []
    skipped: list[tuple[str, str]] = []
    signals: dict[str, np.ndarray] = {}
    for pair in pairs:
        spread = make_spread(test, pair)
        if strategy == "baseline":
            z = zscore_series_baseline(spread, cfg)
        elif ou_refit_window > 0:
            z = zscore_series_ou_rolling(spread, ou_refit_window)
        else:
            params = trained.get((pair.sec_i, pair.sec_j))
            if params is None:
                skipped.append((pair.label, "no trained OU parameters"))
                continue
            z = zscore_series_ou(spread, params)
        pct = rolling_percentile(z, cfg.pct_window)
        positions = generate_positions(pct, cfg, dates=list(test.dates))
        labels.append(pair.label)
        position_cols.append(positions.position)
        return_cols.append(pair_daily_return(positions, test, pair, cost_per_trade))
        signals[pair.label] = np.column_stack([spread.values, z, pct])

    for label, reason in skipped:
        logger.warning("backtest skipped pair %s: %s", label, reason)
    if not labels:
        raise PipelineError(
            f"no includable pairs for strategy {strategy!r} "
            f"({len(skipped)} skipped: {[r for _, r in skipped]})"
        )

    per_pair = np.column_stack(return_cols)
    return BacktestResult(
        dates=list(test.dates),
        pair_labels=labels,
        per_pair_returns=per_pair,
        portfolio_returns=per_pair.mean(axis=1),
        positions=np.column_stack(position_cols),
        strategy_tag=strategy,
        skipped=skipped,
        signals=signals,
    )
