"""Spread construction and Ornstein-Uhlenbeck calibration.

The spread S_t = P_i - P_j is modelled as dS = lambda (mu - S) dt + sigma dW,
whose exact discretization over a step delta is the AR(1) recursion

    S_{t+1} = a S_t + b + eps,   a = exp(-lambda delta),
                                 b = mu (1 - a),
                                 sd(eps) = sigma sqrt((1 - a^2) / (2 lambda)).

Fitting the recursion by OLS and inverting those three relations recovers
(lambda, mu, sigma). A seeded path simulator using the same recursion serves
as the statistical oracle for calibration tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import DataError, DegenerateSeriesError, NonMeanRevertingError
from .market_data import PricePanel, synthetic_trading_dates
from .pair_selection import PairCandidate
from .stat_tests import ols_fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Spread:
    """Price difference series between the two legs of a pair."""

    dates: list[date]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values lengths differ")
        if not np.isfinite(self.values).all():
            raise ValueError("spread values must be finite")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class OuParams:
    """Calibrated spread model in both AR(1) and continuous-time form.

    a, b, sd_eps are the regression-side parameters; lam, mu, sigma the
    mean-reversion rate, long-run mean and diffusion scale per time step
    delta (trading days). Both sides satisfy the discretization identities to
    1e-10 by construction. sd_eps = 0 (deterministic decay) is permitted,
    although z-scores are then undefined.
    """

    a: float
    b: float
    sd_eps: float
    lam: float
    mu: float
    sigma: float
    delta: float

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise NonMeanRevertingError(self.a)
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.sd_eps < 0 or self.sigma < 0:
            raise ValueError("noise scales must be non-negative")
        if abs(self.a - math.exp(-self.lam * self.delta)) > 1e-10 * max(1.0, self.a):
            raise ValueError("inconsistent (a, lam, delta)")
        if abs(self.b - self.mu * (1.0 - self.a)) > 1e-10 * max(1.0, abs(self.b)):
            raise ValueError("inconsistent (b, mu, a)")

    @classmethod
    def from_ar1(cls, a: float, b: float, sd_eps: float, delta: float = 1.0) -> "OuParams":
        if delta <= 0:
            raise ValueError(f"delta must be positive, got {delta}")
        if not 0 < a < 1:
            raise NonMeanRevertingError(a)
        lam = -math.log(a) / delta
        mu = b / (1.0 - a)
        sigma = sd_eps * math.sqrt(-2.0 * math.log(a) / (delta * (1.0 - a * a)))
        return cls(a=a, b=b, sd_eps=sd_eps, lam=lam, mu=mu, sigma=sigma, delta=delta)

    @classmethod
    def from_ou(cls, lam: float, mu: float, sigma: float, delta: float = 1.0) -> "OuParams":
        if lam <= 0:
            raise ValueError(f"lam must be positive, got {lam}")
        if delta <= 0:
            raise ValueError(f"delta must be positive, got {delta}")
        a = math.exp(-lam * delta)
        b = mu * (1.0 - a)
        sd_eps = sigma * math.sqrt((1.0 - a * a) / (2.0 * lam))
        return cls(a=a, b=b, sd_eps=sd_eps, lam=lam, mu=mu, sigma=sigma, delta=delta)

    @property
    def half_life(self) -> float:
        """Days for a deviation from mu to decay by half: ln(2)/lam."""
        return math.log(2.0) / self.lam

    @property
    def stationary_sd(self) -> float:
        """Standard deviation of the stationary distribution, sigma/sqrt(2 lam)."""
        return self.sigma / math.sqrt(2.0 * self.lam)


def make_spread(panel: PricePanel, pair: PairCandidate) -> Spread:
    """S_t = close_i - close_j in the pair's canonical orientation."""
    values = panel.column(pair.sec_i) - panel.column(pair.sec_j)
    return Spread(dates=list(panel.dates), values=values)


def fit_ar1(spread: Spread) -> tuple[float, float, float]:
    """OLS of S_{t+1} on S_t with intercept: returns (a, b, sd_eps).

    sd_eps is the residual standard deviation with an (n-2) denominator,
    n being the number of regression rows.
    """
    s = np.asarray(spread.values, dtype=float)
    if s.size < 30:
        raise DegenerateSeriesError(f"need at least 30 spread observations, got {s.size}")
    if np.ptp(s) == 0:
        raise DegenerateSeriesError("constant spread cannot be fit")
    fit = ols_fit(s[1:], [s[:-1]], intercept=True)
    b, a = float(fit.coefficients[0]), float(fit.coefficients[1])
    rss = float(fit.residuals @ fit.residuals)
    sd_eps = math.sqrt(rss / (fit.nobs - 2))
    return a, b, sd_eps


def ou_from_ar1(a: float, b: float, sd_eps: float, delta: float = 1.0) -> OuParams:
    """Invert the AR(1) fit into OU parameters (raises for a outside (0,1))."""
    return OuParams.from_ar1(a, b, sd_eps, delta)


def calibrate(spread: Spread, delta: float = 1.0) -> OuParams:
    """fit_ar1 + ou_from_ar1 in one step."""
    a, b, sd_eps = fit_ar1(spread)
    return ou_from_ar1(a, b, sd_eps, delta)


def zscore(s_t: float, params: OuParams) -> float:
    """Standardized deviation (s_t - mu) / sigma."""
    if params.sigma == 0:
        raise DegenerateSeriesError("sigma is zero; z-score undefined")
    return (s_t - params.mu) / params.sigma


def simulate_ou(params: OuParams, n: int, s0: float, seed: int) -> Spread:
    """Seeded exact-discretization path of length n starting at s0."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    shocks = params.sd_eps * rng.standard_normal(n - 1)
    values = np.empty(n)
    values[0] = s0
    for t in range(1, n):
        values[t] = params.a * values[t - 1] + params.b + shocks[t - 1]
    return Spread(dates=synthetic_trading_dates(n, start=date(2000, 1, 3)), values=values)


def rolling_stats(spread: Spread, window: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Trailing-window mean and sample sd (ddof=1), NaN until the window fills."""
    if window < 2:
        raise ValueError(f"window must be at least 2, got {window}")
    s = np.asarray(spread.values, dtype=float)
    if s.size < window:
        raise DegenerateSeriesError(f"window {window} exceeds series length {s.size}")
    views = np.lib.stride_tricks.sliding_window_view(s, window)
    mu = np.full(s.size, np.nan)
    sd = np.full(s.size, np.nan)
    mu[window - 1 :] = views.mean(axis=1)
    sd[window - 1 :] = views.std(axis=1, ddof=1)
    return mu, sd
