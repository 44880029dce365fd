"""Distance-based pair scoring and greedy disjoint selection.

Every unordered security pair is scored by the mean squared distance between
their daily return series on the training window; pairs are then accepted in
ascending-distance order, skipping any pair whose member was already taken.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError, PipelineError
from .market_data import PricePanel

logger = logging.getLogger(__name__)


@dataclass
class PairCandidate:
    """A canonically ordered (sec_i < sec_j) pair with its selection stats.

    coint_stat / p_value / retained are filled by validation; fail_reason
    records why a pair was rejected without aborting the batch.
    """

    sec_i: str
    sec_j: str
    msd: float
    coint_stat: float | None = None
    p_value: float | None = None
    retained: bool = False
    review_label: str | None = None
    fail_reason: str | None = None

    def __post_init__(self):
        if self.sec_i == self.sec_j:
            raise ValueError(f"pair legs must differ, got {self.sec_i!r} twice")
        if self.sec_i > self.sec_j:
            self.sec_i, self.sec_j = self.sec_j, self.sec_i
        if self.msd < 0:
            raise ValueError(f"msd must be non-negative, got {self.msd}")
        if self.p_value is not None and not 0 <= self.p_value <= 1:
            raise ValueError(f"p_value outside [0, 1]: {self.p_value}")

    @property
    def label(self) -> str:
        return f"{self.sec_i}|{self.sec_j}"


def msd(returns_i: np.ndarray, returns_j: np.ndarray) -> float:
    """Mean squared distance (1/N) * sum (R_i - R_j)^2 between return series."""
    ri = np.asarray(returns_i, dtype=float)
    rj = np.asarray(returns_j, dtype=float)
    if ri.shape != rj.shape or ri.ndim != 1:
        raise ValueError(f"return series shapes differ: {ri.shape} vs {rj.shape}")
    if ri.size < 2:
        raise ValueError("need at least 2 observations")
    if np.isnan(ri).any() or np.isnan(rj).any():
        raise ValueError("return series contain missing values")
    diff = ri - rj
    return float(diff @ diff / diff.size)


def select_pairs(train: PricePanel, max_pairs: int = 10) -> list[PairCandidate]:
    """Greedy disjoint matching over all pairwise MSDs on the training window.

    Candidates are ranked by (msd, sec_i, sec_j) ascending, so ties break on
    the canonical pair ordering and the result is invariant to the input
    column order. Selection stops at max_pairs or when every security is used.
    """
    ranked = rank_all_pairs(train)
    selected: list[PairCandidate] = []
    used: set[str] = set()
    for cand in ranked:
        if len(selected) >= max_pairs:
            break
        if cand.sec_i in used or cand.sec_j in used:
            continue
        used.update((cand.sec_i, cand.sec_j))
        selected.append(cand)
    logger.info("selected %d pairs from %d candidates", len(selected), len(ranked))
    return selected


def rank_all_pairs(train: PricePanel) -> list[PairCandidate]:
    """All C(n,2) pair candidates sorted ascending by (msd, sec_i, sec_j)."""
    if train.n_securities < 2:
        raise PipelineError("pair selection needs at least 2 securities")
    rets = train.returns[1:]
    if rets.shape[0] < 2:
        raise PipelineError("pair selection needs at least 2 return rows")
    if np.isnan(rets).any():
        raise DataError("training returns contain missing values")

    # d_ij = E[(r_i - r_j)^2] = g_ii + g_jj - 2 g_ij with g the raw second-moment matrix
    gram = rets.T @ rets / rets.shape[0]
    diag = np.diag(gram)
    dists = diag[:, None] + diag[None, :] - 2.0 * gram

    candidates = []
    ids = train.securities
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            candidates.append(PairCandidate(ids[i], ids[j], max(float(dists[i, j]), 0.0)))
    candidates.sort(key=lambda c: (c.msd, c.sec_i, c.sec_j))
    return candidates


PAIR_CSV_COLUMNS = [
    "sec_i", "sec_j", "msd", "coint_stat", "p_value", "retained", "fail_reason", "review_label",
]


def dump_pair_table(pairs: list[PairCandidate], path: str) -> None:
    """Write pairs (selected or enriched) as CSV for audit and stage hand-off."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAIR_CSV_COLUMNS)
        for p in pairs:
            writer.writerow([
                p.sec_i,
                p.sec_j,
                repr(p.msd),
                "" if p.coint_stat is None else repr(p.coint_stat),
                "" if p.p_value is None else repr(p.p_value),
                "true" if p.retained else "false",
                p.fail_reason or "",
                p.review_label or "",
            ])


def load_pair_table(path: str) -> list[PairCandidate]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open pair table {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = set(PAIR_CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"pair table {path} missing columns: {sorted(missing)}")
        pairs = []
        for row in reader:
            pairs.append(
                PairCandidate(
                    sec_i=row["sec_i"],
                    sec_j=row["sec_j"],
                    msd=float(row["msd"]),
                    coint_stat=float(row["coint_stat"]) if row["coint_stat"] else None,
                    p_value=float(row["p_value"]) if row["p_value"] else None,
                    retained=row["retained"] == "true",
                    fail_reason=row["fail_reason"] or None,
                    review_label=row["review_label"] or None,
                )
            )
    return pairs
