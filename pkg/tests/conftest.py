"""Shared builders for the test suite."""

from datetime import date

import numpy as np
import pytest

from oupairs.market_data import PricePanel, synthetic_trading_dates


def make_panel(price_columns: dict[str, list[float]], start: date = date(2018, 1, 2)) -> PricePanel:
    """Panel from {security: prices} with synthetic weekday dates."""
    lengths = {len(v) for v in price_columns.values()}
    assert len(lengths) == 1, "columns must have equal length"
    n = lengths.pop()
    securities = sorted(price_columns)
    closes = np.column_stack([np.asarray(price_columns[s], dtype=float) for s in securities])
    returns = np.full_like(closes, np.nan)
    returns[1:] = closes[1:] / closes[:-1] - 1.0
    return PricePanel(
        dates=synthetic_trading_dates(n, start=start),
        securities=securities,
        closes=closes,
        returns=returns,
    )


def cointegrated_prices(n: int, seed: int, lam_day: float = 15.0 / 252,
                        stat_sd: float = 1.5, mu: float = 0.0,
                        walk_vol: float = 0.008, start_price: float = 100.0):
    """(leg_a, leg_b) price arrays sharing a walk, spread OU by construction."""
    rng = np.random.default_rng(seed)
    base = start_price * np.exp(np.cumsum(rng.normal(0.0, walk_vol, n)))
    a = np.exp(-lam_day)
    sd_eps = stat_sd * np.sqrt(1.0 - a * a)
    s = np.empty(n)
    s[0] = mu
    shocks = rng.standard_normal(n)
    for t in range(1, n):
        s[t] = a * s[t - 1] + mu * (1 - a) + sd_eps * shocks[t]
    return base + s, base


@pytest.fixture
def small_panel() -> PricePanel:
    return make_panel(
        {
            "AAA": [10.0, 10.5, 10.2, 10.8, 11.0],
            "BBB": [20.0, 20.4, 20.1, 20.9, 21.3],
        }
    )
