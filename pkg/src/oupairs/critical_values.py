"""Dickey-Fuller / Engle-Granger p-value response surfaces.

Static constants transcribed from MacKinnon (1994), "Approximate Asymptotic
Distribution Functions for Unit-Root and Cointegration Tests", J. Business &
Economic Statistics 12(2). The tables map a tau statistic to an approximate
one-sided (left tail) p-value via Phi(poly(tau)), with a small-p polynomial
below the stitch point tau_star and a large-p polynomial above it.

Index 0 of each list is the plain unit-root test (one series); index 1 is the
residual-based cointegration test with two estimated series. `regression`
selects the deterministic terms of the regression whose distribution applies:
"constant" for an intercept, "none" for no deterministic terms.
"""

from __future__ import annotations

import math

__all__ = ["dickey_fuller_pvalue"]

_INF = float("inf")

# Stitch points and domain clamps, [N=1, N=2].
_TAU_STAR = {
    "none": [-1.04, -1.53],
    "constant": [-1.61, -2.62],
}
_TAU_MIN = {
    "none": [-19.04, -19.62],
    "constant": [-18.83, -18.86],
}
_TAU_MAX = {
    "none": [_INF, 1.51],
    "constant": [2.74, 0.92],
}

# Polynomial coefficients (ascending powers of tau) for the small-p branch
# (tau <= tau_star) and the large-p branch (tau > tau_star).
_TAU_SMALLP = {
    "none": [
        [0.6344, 1.2378, 0.032496],
        [1.9129, 1.3857, 0.035322],
    ],
    "constant": [
        [2.1659, 1.4412, 0.038269],
        [2.9200, 1.5012, 0.039796],
    ],
}
_TAU_LARGEP = {
    "none": [
        [0.4797, 0.93557, -0.06999, 0.033066],
        [1.5578, 0.85580, -0.20830, -0.033549],
    ],
    "constant": [
        [1.7339, 0.93202, -0.12745, -0.010368],
        [2.1945, 0.64695, -0.29198, -0.042377],
    ],
}


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def dickey_fuller_pvalue(stat: float, regression: str, n_series: int = 1) -> float:
    """Approximate left-tail p-value for a Dickey-Fuller type tau statistic.

    n_series=1 gives the ADF distribution; n_series=2 the Engle-Granger
    residual distribution with one estimated cointegrating regressor plus
    intercept. Outside the tabulated domain the p-value saturates at 0 or 1.
    """
    if regression not in _TAU_STAR:
        raise ValueError(f"unknown regression kind {regression!r}")
    if not 1 <= n_series <= 2:
        raise ValueError("n_series must be 1 or 2")
    i = n_series - 1
    if stat > _TAU_MAX[regression][i]:
        return 1.0
    if stat < _TAU_MIN[regression][i]:
        return 0.0
    if stat <= _TAU_STAR[regression][i]:
        coeffs = _TAU_SMALLP[regression][i]
    else:
        coeffs = _TAU_LARGEP[regression][i]
    z = sum(c * stat**k for k, c in enumerate(coeffs))
    return _norm_cdf(z)
