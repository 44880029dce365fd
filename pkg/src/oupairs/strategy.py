"""Percentile-threshold signal generation.

Both strategies map a spread z-score (rolling 30-day statistics for the
baseline, fixed trained OU parameters otherwise) to a rolling 90-day
percentile, then run a long/flat/short state machine: enter short above the
upper percentile, enter long below the lower one, exit on touching the
median. Every decision made on day t takes effect on day t+1, so position[t]
only depends on information dated t-1 or earlier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import ConfigError, DegenerateSeriesError
from .market_data import synthetic_trading_dates
from .ou_model import OuParams, Spread, fit_ar1, rolling_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdConfig:
    upper_pct: float = 0.75
    lower_pct: float = 0.25
    exit_pct: float = 0.50
    pct_window: int = 90
    stats_window: int = 30

    def __post_init__(self):
        if not 0 <= self.lower_pct < self.exit_pct < self.upper_pct <= 1:
            raise ConfigError(
                "thresholds must satisfy 0 <= lower < exit < upper <= 1, got "
                f"({self.lower_pct}, {self.exit_pct}, {self.upper_pct})"
            )
        if self.pct_window < 10:
            raise ConfigError(f"pct_window must be at least 10, got {self.pct_window}")
        if self.stats_window < 2:
            raise ConfigError(f"stats_window must be at least 2, got {self.stats_window}")


@dataclass(frozen=True)
class PositionSeries:
    """Daily spread position in {-1, 0, +1}, point-in-time by construction."""

    dates: list[date]
    position: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.position):
            raise ValueError("dates and position lengths differ")
        if not np.isin(self.position, (-1, 0, 1)).all():
            raise ValueError("positions must be in {-1, 0, +1}")


def zscore_series_baseline(spread: Spread, cfg: ThresholdConfig) -> np.ndarray:
    """z[t] = (S_t - rolling mean) / rolling sd; NaN while the window fills
    or where the window sd is zero."""
    mu, sd = rolling_stats(spread, cfg.stats_window)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = (spread.values - mu) / sd
    z[~np.isfinite(z)] = np.nan
    return z


def zscore_series_ou(spread: Spread, params: OuParams) -> np.ndarray:
    """z[t] = (S_t - mu) / sigma with the trained parameters held fixed."""
    if params.sigma == 0:
        raise DegenerateSeriesError("sigma is zero; z-score undefined")
    return (spread.values - params.mu) / params.sigma


def zscore_series_ou_rolling(spread: Spread, window: int, delta: float = 1.0) -> np.ndarray:
    """Optional rolling-refit variant: z[t] from an AR(1) fit on the trailing
    `window` observations ending at t. NaN while the window fills or when the
    local fit is not mean-reverting."""
    if window < 30:
        raise ConfigError(f"rolling OU refit window must be at least 30, got {window}")
    s = spread.values
    z = np.full(s.size, np.nan)
    for t in range(window - 1, s.size):
        chunk = Spread(dates=spread.dates[t - window + 1 : t + 1], values=s[t - window + 1 : t + 1])
        try:
            a, b, sd_eps = fit_ar1(chunk)
            params = OuParams.from_ar1(a, b, sd_eps, delta)
        except Exception:
            continue
        if params.sigma > 0:
            z[t] = (s[t] - params.mu) / params.sigma
    return z


def rolling_percentile(z: np.ndarray, window: int) -> np.ndarray:
    """Midpoint-tie rank of z[t] within its trailing window (current value
    included): pct[t] = (#less + 0.5 * #equal) / window. NaN until the window
    is full of defined z values."""
    if window < 10:
        raise ConfigError(f"percentile window must be at least 10, got {window}")
    z = np.asarray(z, dtype=float)
    pct = np.full(z.size, np.nan)
    if z.size < window:
        return pct
    views = np.lib.stride_tricks.sliding_window_view(z, window)
    current = z[window - 1 :]
    valid = ~np.isnan(views).any(axis=1)
    less = (views < current[:, None]).sum(axis=1)
    equal = (views == current[:, None]).sum(axis=1)
    ranks = (less + 0.5 * equal) / window
    pct[window - 1 :] = np.where(valid, ranks, np.nan)
    return pct


def generate_positions(
    pct: np.ndarray,
    cfg: ThresholdConfig,
    dates: list[date] | None = None,
) -> PositionSeries:
    """Evaluate the entry/exit state machine with a one-day execution lag.

    From flat: pct > upper enters short, pct < lower enters long. A short
    exits when pct <= exit, a long when pct >= exit; exits dominate
    same-day re-entry, and undefined pct days hold the prior state.
    """
    pct = np.asarray(pct, dtype=float)
    n = pct.size
    pos = np.zeros(n, dtype=np.int8)
    for t in range(n - 1):
        state = pos[t]
        p = pct[t]
        if np.isnan(p):
            pos[t + 1] = state
        elif state == 0:
            if p > cfg.upper_pct:
                pos[t + 1] = -1
            elif p < cfg.lower_pct:
                pos[t + 1] = 1
        elif state == -1:
            pos[t + 1] = 0 if p <= cfg.exit_pct else -1
        else:
            pos[t + 1] = 0 if p >= cfg.exit_pct else 1
    if dates is None:
        dates = synthetic_trading_dates(n)
    return PositionSeries(dates=dates, position=pos)
