"""Synthetic universe generator for demos and end-to-end tests.

Each pair shares a geometric random-walk base leg; the sibling leg adds a
seeded OU spread on top, so the two price series are cointegrated by
construction with known parameters. Optional decoy securities are
independent walks. Output rows follow the ingestion schema, so the generated
file feeds straight into the pipeline.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date

import numpy as np

from .market_data import DEFAULT_SCHEMA, synthetic_trading_dates
from .ou_model import OuParams, simulate_ou

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class PairTruth:
    """Ground-truth generation parameters for one cointegrated pair."""

    ticker_a: str
    ticker_b: str
    lam_per_year: float
    mu: float
    sigma: float
    stationary_sd: float


def generate_universe(
    n_pairs: int,
    n_days: int,
    seed: int,
    n_decoys: int = 2,
    lam_per_year_range: tuple[float, float] = (12.0, 30.0),
    spread_sd_range: tuple[float, float] = (1.0, 2.5),
    mu_range: tuple[float, float] = (-1.0, 1.0),
    start_price: float = 100.0,
    walk_vol: float = 0.008,
    start: date = date(2018, 1, 2),
) -> tuple[list[dict], list[PairTruth]]:
    """Build security-day rows for n_pairs cointegrated pairs plus decoys.

    Returns (rows, truths); rows use the default ingestion column names.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be at least 1, got {n_pairs}")
    if n_days < 10:
        raise ValueError(f"n_days must be at least 10, got {n_days}")
    rng = np.random.default_rng(seed)
    dates = synthetic_trading_dates(n_days, start=start)

    securities: list[tuple[str, np.ndarray]] = []
    truths: list[PairTruth] = []
    for k in range(n_pairs):
        base = start_price * np.exp(np.cumsum(rng.normal(0.0, walk_vol, n_days)))
        lam_day = rng.uniform(*lam_per_year_range) / TRADING_DAYS_PER_YEAR
        stat_sd = rng.uniform(*spread_sd_range)
        mu = rng.uniform(*mu_range)
        sigma = stat_sd * np.sqrt(2.0 * lam_day)
        params = OuParams.from_ou(lam=lam_day, mu=mu, sigma=sigma, delta=1.0)
        spread = simulate_ou(params, n_days, s0=mu, seed=int(rng.integers(0, 2**31)))
        leg_a = base + spread.values
        if leg_a.min() <= 0:
            logger.warning("pair %d leg clipped to stay positive", k)
            leg_a = np.maximum(leg_a, 0.01)
        securities.append((f"P{k:02d}A", leg_a))
        securities.append((f"P{k:02d}B", base))
        truths.append(
            PairTruth(
                ticker_a=f"P{k:02d}A",
                ticker_b=f"P{k:02d}B",
                lam_per_year=lam_day * TRADING_DAYS_PER_YEAR,
                mu=mu,
                sigma=sigma,
                stationary_sd=stat_sd,
            )
        )
    for k in range(n_decoys):
        walk = start_price * np.exp(np.cumsum(rng.normal(0.0, walk_vol, n_days)))
        securities.append((f"D{k:02d}X", walk))

    rows: list[dict] = []
    for idx, (ticker, prices) in enumerate(securities):
        for t, d in enumerate(dates):
            rows.append(
                {
                    "infocode": str(1000 + idx),
                    "dscode": str(9000 + idx),
                    "isin": f"US{idx:010d}",
                    "ticker": ticker,
                    "name": f"SYNTHETIC {ticker}",
                    "region": "US",
                    "currency": "USD",
                    "marketdate": d.isoformat(),
                    "adjclose": f"{prices[t]:.6f}",
                    "marketcap": f"{5e9 + idx:.0f}",
                    "general_industry": "SYNTHETIC",
                    "industry_group": "PAIRS",
                }
            )
    return rows, truths


def write_price_file(path: str, rows: list[dict]) -> None:
    """Write generated rows with the default ingestion column headers."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([DEFAULT_SCHEMA[fld] for fld in DEFAULT_SCHEMA])
        for row in rows:
            writer.writerow([row[fld] for fld in DEFAULT_SCHEMA])
