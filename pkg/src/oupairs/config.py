"""Run configuration: one flat YAML file capturing every pipeline knob.

Command-line flags override file values; the effective configuration is
echoed verbatim into the run manifest so results stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date, datetime

import yaml

from .errors import ConfigError
from .market_data import DateSplit, UniverseFilter
from .strategy import ThresholdConfig

STRATEGY_CHOICES = ("baseline", "ou", "both")


@dataclass
class RunConfig:
    # data
    prices_file: str
    train_start: date
    train_end: date
    test_start: date
    test_end: date
    out_dir: str = "run_output"
    lenient_parse: bool = False
    # universe
    min_marketcap: float = 1e9
    region: str = "US"
    currency: str = "USD"
    start_date: date = date(2018, 1, 1)
    # panel
    min_coverage: float = 0.95
    ffill_limit: int = 5
    min_active_frac: float = 0.5
    # selection / validation
    max_pairs: int = 10
    alpha: float = 0.05
    cointegrate_on: str = "returns"
    # signals
    upper_pct: float = 0.75
    lower_pct: float = 0.25
    exit_pct: float = 0.50
    pct_window: int = 90
    stats_window: int = 30
    # OU calibration
    delta: float = 1.0
    ou_refit_window: int = 0
    # backtest / metrics
    strategy: str = "both"
    cost_per_trade: float = 0.0
    dump_signals: bool = False
    rf_annual: float = 0.01
    periods_per_year: int = 252
    seed: int = 0

    def __post_init__(self):
        for name in ("train_start", "train_end", "test_start", "test_end", "start_date"):
            setattr(self, name, _coerce_date(name, getattr(self, name)))
        if self.strategy not in STRATEGY_CHOICES:
            raise ConfigError(f"strategy must be one of {STRATEGY_CHOICES}, got {self.strategy!r}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.max_pairs < 1:
            raise ConfigError(f"max_pairs must be at least 1, got {self.max_pairs}")
        if not 0 < self.min_coverage <= 1:
            raise ConfigError(f"min_coverage must be in (0, 1], got {self.min_coverage}")
        if self.ffill_limit < 0:
            raise ConfigError(f"ffill_limit must be non-negative, got {self.ffill_limit}")
        if self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.cointegrate_on not in ("returns", "prices"):
            raise ConfigError(f"cointegrate_on must be 'returns' or 'prices', got {self.cointegrate_on!r}")
        if self.cost_per_trade < 0:
            raise ConfigError(f"cost_per_trade must be non-negative, got {self.cost_per_trade}")
        # constructing these validates their invariants up front
        self.threshold_config()
        self.date_split()
        self.universe_filter()

    def threshold_config(self) -> ThresholdConfig:
        return ThresholdConfig(
            upper_pct=self.upper_pct,
            lower_pct=self.lower_pct,
            exit_pct=self.exit_pct,
            pct_window=self.pct_window,
            stats_window=self.stats_window,
        )

    def universe_filter(self) -> UniverseFilter:
        return UniverseFilter(
            min_marketcap=self.min_marketcap,
            region=self.region,
            currency=self.currency,
            start_date=self.start_date,
        )

    def date_split(self) -> DateSplit:
        return DateSplit(
            train_start=self.train_start,
            train_end=self.train_end,
            test_start=self.test_start,
            test_end=self.test_end,
        )

    def strategies(self) -> list[str]:
        return ["baseline", "ou"] if self.strategy == "both" else [self.strategy]

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.isoformat() if isinstance(value, date) else value
        return out


def _coerce_date(name: str, value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value)
        except ValueError:
            raise ConfigError(f"{name}: unparseable date {value!r}") from None
    raise ConfigError(f"{name}: expected an ISO date, got {value!r}")


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Read the YAML file, apply overrides, and validate."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot open config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a flat mapping")

    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    missing = {"prices_file", "train_start", "train_end", "test_start", "test_end"} - set(raw)
    if missing:
        raise ConfigError(f"config missing required keys: {sorted(missing)}")
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
