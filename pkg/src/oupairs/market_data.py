"""Security file ingestion, universe filtering, and panel construction.

The input is a delimiter-separated text file with one row per security-day.
Column names are remapped through a schema dict; rows are deduplicated on
(infocode, dscode, marketdate) keeping the first occurrence. The filtered
records are assembled into a date-aligned close matrix with derived simple
returns, then split into train/test ranges.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

# field name -> default column header; only the REQUIRED_FIELDS must exist in
# the file. Optional columns that are absent load as None.
DEFAULT_SCHEMA: dict[str, str] = {
    "infocode": "infocode",
    "dscode": "dscode",
    "isin": "isin",
    "ticker": "ticker",
    "name": "dssecname",
    "region": "region",
    "currency": "currency",
    "marketdate": "marketdate",
    "adjclose": "adjclose",
    "marketcap": "marketcap",
    "general_industry": "general_industry_desc",
    "industry_group": "industry_group_desc",
}

REQUIRED_FIELDS = ("infocode", "dscode", "marketdate", "adjclose")


@dataclass(frozen=True)
class SecurityRecord:
    """One security-day row after parsing."""

    infocode: str
    dscode: str
    marketdate: date
    adjclose: float
    isin: str | None = None
    ticker: str | None = None
    name: str | None = None
    region: str | None = None
    currency: str | None = None
    marketcap: float | None = None
    general_industry: str | None = None
    industry_group: str | None = None

    @property
    def security_key(self) -> tuple[str, str]:
        return (self.infocode, self.dscode)


@dataclass(frozen=True)
class UniverseFilter:
    """Membership predicates applied once per security (see filter_universe)."""

    min_marketcap: float = 1e9
    region: str = "US"
    currency: str = "USD"
    start_date: date = date(2018, 1, 1)

    def __post_init__(self):
        if self.min_marketcap <= 0:
            raise ConfigError("min_marketcap must be positive")


@dataclass(frozen=True)
class DateSplit:
    train_start: date
    train_end: date
    test_start: date
    test_end: date

    def __post_init__(self):
        if not (self.train_start <= self.train_end):
            raise ConfigError("train_start must not be after train_end")
        if not (self.test_start <= self.test_end):
            raise ConfigError("test_start must not be after test_end")
        if not (self.train_end < self.test_start):
            raise ConfigError("train_end must precede test_start")


@dataclass
class PricePanel:
    """Date-aligned close matrix with derived simple returns.

    closes is dates x securities; returns[t] = closes[t]/closes[t-1] - 1 with
    the first row NaN. Retained columns are complete (gaps already filled or
    the security dropped), so rows of `returns` after the first are finite.
    """

    dates: list[date]
    securities: list[str]
    closes: np.ndarray
    returns: np.ndarray
    fill_counts: dict[str, int] = field(default_factory=dict)
    dropped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_securities(self) -> int:
        return len(self.securities)

    def column(self, security: str) -> np.ndarray:
        try:
            return self.closes[:, self.securities.index(security)]
        except ValueError:
            raise DataError(f"security {security!r} not in panel") from None

    def return_column(self, security: str) -> np.ndarray:
        try:
            return self.returns[:, self.securities.index(security)]
        except ValueError:
            raise DataError(f"security {security!r} not in panel") from None


def synthetic_trading_dates(n: int, start: date = date(2018, 1, 2)) -> list[date]:
    """n consecutive weekdays beginning at start (shifted forward off weekends)."""
    out: list[date] = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d = d + timedelta(days=1)
    return out


def _compute_returns(closes: np.ndarray) -> np.ndarray:
    returns = np.full_like(closes, np.nan)
    returns[1:] = closes[1:] / closes[:-1] - 1.0
    return returns


def load_records(
    path: str,
    schema: dict[str, str] | None = None,
    lenient: bool = False,
    delimiter: str = ",",
) -> list[SecurityRecord]:
    """Parse a security file into deduplicated records.

    schema overrides entries of DEFAULT_SCHEMA (field name -> column header).
    A column named explicitly in `schema`, or backing a required field, must
    exist in the header; other absent columns yield None fields. Unparseable
    rows are fatal unless lenient, in which case they are skipped with a
    warning carrying the row index.
    """
    mapping = dict(DEFAULT_SCHEMA)
    explicit = set()
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise ConfigError(f"unknown schema fields: {sorted(unknown)}")
        mapping.update(schema)
        explicit = set(schema)

    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open price file {path}: {exc}") from exc

    with fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        for fld, col in mapping.items():
            if col not in header and (fld in REQUIRED_FIELDS or fld in explicit):
                raise DataError(f"column {col!r} (field {fld!r}) missing from {path}")
        present = {fld: col for fld, col in mapping.items() if col in header}

        records: list[SecurityRecord] = []
        seen: set[tuple[str, str, date]] = set()
        n_rows = n_dupes = n_skipped = 0
        for idx, row in enumerate(reader, start=2):  # row 1 is the header
            n_rows += 1
            try:
                records_row = _parse_row(row, present)
            except ValueError as exc:
                if lenient:
                    n_skipped += 1
                    logger.warning("row %d skipped: %s", idx, exc)
                    continue
                raise DataError(f"row {idx}: {exc}") from exc
            key = (records_row.infocode, records_row.dscode, records_row.marketdate)
            if key in seen:
                n_dupes += 1
                continue
            seen.add(key)
            records.append(records_row)

    logger.info(
        "loaded %d rows from %s (%d duplicates collapsed, %d skipped)",
        n_rows, path, n_dupes, n_skipped,
    )
    return records


def _parse_row(row: dict[str, str], present: dict[str, str]) -> SecurityRecord:
    def raw(fld: str) -> str | None:
        col = present.get(fld)
        if col is None:
            return None
        value = (row.get(col) or "").strip()
        return value or None

    infocode = raw("infocode")
    dscode = raw("dscode")
    if not infocode or not dscode:
        raise ValueError("empty infocode/dscode")
    try:
        marketdate = date.fromisoformat(raw("marketdate") or "")
    except ValueError:
        raise ValueError(f"unparseable marketdate {raw('marketdate')!r}") from None
    close_txt = raw("adjclose")
    try:
        adjclose = float(close_txt or "")
    except ValueError:
        raise ValueError(f"unparseable adjclose {close_txt!r}") from None
    if not np.isfinite(adjclose) or adjclose <= 0:
        raise ValueError(f"non-positive adjclose {adjclose!r}")
    cap_txt = raw("marketcap")
    marketcap = None
    if cap_txt is not None:
        try:
            marketcap = float(cap_txt)
        except ValueError:
            raise ValueError(f"unparseable marketcap {cap_txt!r}") from None

    return SecurityRecord(
        infocode=infocode,
        dscode=dscode,
        marketdate=marketdate,
        adjclose=adjclose,
        isin=raw("isin"),
        ticker=raw("ticker"),
        name=raw("name"),
        region=raw("region"),
        currency=raw("currency"),
        marketcap=marketcap,
        general_industry=raw("general_industry"),
        industry_group=raw("industry_group"),
    )


def filter_universe(records: list[SecurityRecord], f: UniverseFilter) -> list[SecurityRecord]:
    """Keep in-range records of securities passing all membership predicates.

    Membership is decided once per security from its first record dated on or
    after start_date: market cap at that date must reach min_marketcap, and
    region/currency must match. Records before start_date are discarded.
    """
    in_range = [r for r in records if r.marketdate >= f.start_date]
    first_by_sec: dict[tuple[str, str], SecurityRecord] = {}
    for rec in in_range:
        prev = first_by_sec.get(rec.security_key)
        if prev is None or rec.marketdate < prev.marketdate:
            first_by_sec[rec.security_key] = rec

    accepted = {
        key
        for key, rec in first_by_sec.items()
        if rec.marketcap is not None
        and rec.marketcap >= f.min_marketcap
        and rec.region == f.region
        and rec.currency == f.currency
    }
    kept = [r for r in in_range if r.security_key in accepted]
    logger.info(
        "universe filter kept %d of %d securities (%d records)",
        len(accepted), len(first_by_sec), len(kept),
    )
    return kept


def _security_ids(by_sec: dict[tuple[str, str], dict]) -> dict[tuple[str, str], str]:
    """Stable display id per security: the ticker when globally unique."""
    counts = Counter(info["ticker"] for info in by_sec.values() if info["ticker"])
    ids = {}
    for key, info in by_sec.items():
        ticker = info["ticker"]
        ids[key] = ticker if ticker and counts[ticker] == 1 else f"{key[0]}:{key[1]}"
    return ids


def build_panel(
    records: list[SecurityRecord],
    min_coverage: float = 0.95,
    ffill_limit: int = 5,
    min_active_frac: float = 0.5,
) -> PricePanel:
    """Assemble the date-aligned close panel.

    Panel dates are the union of all marketdates restricted to days on which
    at least min_active_frac of securities trade. A security is dropped when
    its raw coverage falls below min_coverage, when an interior gap exceeds
    ffill_limit consecutive panel dates, or when it is missing at the panel
    start (nothing to fill forward from). Surviving gaps are forward-filled,
    which makes the filled days' returns zero.
    """
    if not records:
        raise DataError("no records to build a panel from")

    by_sec: dict[tuple[str, str], dict] = {}
    for rec in records:
        info = by_sec.setdefault(rec.security_key, {"ticker": rec.ticker, "closes": {}})
        info["closes"].setdefault(rec.marketdate, rec.adjclose)

    n_secs = len(by_sec)
    date_activity: dict[date, int] = {}
    for info in by_sec.values():
        for d in info["closes"]:
            date_activity[d] = date_activity.get(d, 0) + 1
    dates = sorted(d for d, count in date_activity.items() if count >= min_active_frac * n_secs)
    if not dates:
        raise DataError("no panel dates satisfy the minimum-activity rule")

    ids = _security_ids(by_sec)
    order = sorted(by_sec, key=lambda k: ids[k])

    kept_ids: list[str] = []
    columns: list[np.ndarray] = []
    fill_counts: dict[str, int] = {}
    dropped: list[tuple[str, str]] = []
    n_dates = len(dates)
    for key in order:
        sec_id = ids[key]
        closes = by_sec[key]["closes"]
        raw = np.array([closes.get(d, np.nan) for d in dates])
        coverage = np.count_nonzero(~np.isnan(raw)) / n_dates
        if coverage < min_coverage:
            dropped.append((sec_id, f"coverage {coverage:.3f} below {min_coverage}"))
            continue
        filled, n_filled, reason = _forward_fill(raw, ffill_limit)
        if reason:
            dropped.append((sec_id, reason))
            continue
        kept_ids.append(sec_id)
        columns.append(filled)
        fill_counts[sec_id] = n_filled

    if not kept_ids:
        raise DataError(
            f"all securities dropped building the panel (min_coverage={min_coverage})"
        )
    for sec_id, reason in dropped:
        logger.info("panel dropped %s: %s", sec_id, reason)

    closes = np.column_stack(columns)
    return PricePanel(
        dates=dates,
        securities=kept_ids,
        closes=closes,
        returns=_compute_returns(closes),
        fill_counts=fill_counts,
        dropped=dropped,
    )


def _forward_fill(raw: np.ndarray, limit: int) -> tuple[np.ndarray, int, str | None]:
    """Fill interior gaps up to `limit` days; report why the column is unusable."""
    if np.isnan(raw[0]):
        return raw, 0, "missing at panel start"
    filled = raw.copy()
    n_filled = 0
    run = 0
    for t in range(1, len(filled)):
        if np.isnan(filled[t]):
            run += 1
            if run > limit:
                return raw, 0, f"gap longer than {limit} days"
            filled[t] = filled[t - 1]
            n_filled += 1
        else:
            run = 0
    return filled, n_filled, None


def split_panel(panel: PricePanel, split: DateSplit) -> tuple[PricePanel, PricePanel]:
    """Partition the panel into train/test date ranges (securities unchanged)."""
    darr = panel.dates
    train_idx = [t for t, d in enumerate(darr) if split.train_start <= d <= split.train_end]
    test_idx = [t for t, d in enumerate(darr) if split.test_start <= d <= split.test_end]
    if not train_idx or not test_idx:
        raise DataError(
            f"empty {'train' if not train_idx else 'test'} range for split {split}"
        )
    return _subset(panel, train_idx), _subset(panel, test_idx)


def _subset(panel: PricePanel, idx: list[int]) -> PricePanel:
    closes = panel.closes[idx]
    return replace(
        panel,
        dates=[panel.dates[t] for t in idx],
        closes=closes,
        returns=_compute_returns(closes),
    )


def dump_panel(panel: PricePanel, path: str) -> None:
    """Write the aligned close matrix as date,SEC1,SEC2,... (round-trip exact)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.securities])
        for t, d in enumerate(panel.dates):
            writer.writerow([d.isoformat(), *(repr(float(x)) for x in panel.closes[t])])


def load_panel(path: str) -> PricePanel:
    """Read a panel written by dump_panel; returns are recomputed."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open panel file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date":
            raise DataError(f"{path} is not a panel dump (missing date column)")
        securities = header[1:]
        dates: list[date] = []
        rows: list[list[float]] = []
        for row in reader:
            dates.append(date.fromisoformat(row[0]))
            rows.append([float(x) for x in row[1:]])
    if not rows:
        raise DataError(f"panel file {path} has no rows")
    closes = np.array(rows)
    return PricePanel(
        dates=dates,
        securities=securities,
        closes=closes,
        returns=_compute_returns(closes),
    )
