"""Scalar special functions.

``l_minus`` / ``l_plus`` are the two positive roots of ``L - ln L - 1 = delta``
(the lower one is ``-W(-exp(-1 - delta))`` on the principal Lambert-W branch).
The ``_``-prefixed cores are numba-compiled so the simulation kernel and the
pure-Python engine evaluate exactly the same floating point code.
"""

import math

import numpy as np
from numba import njit
from scipy import special

_MAX_ITER = 200


@njit(cache=True)
def _l_minus(delta):
    if delta == 0.0:
        return 1.0
    # Solve in y = ln L on [-(1 + delta), 0]; g(y) = expm1(y) - y - delta is
    # decreasing there with g(lo) = exp(lo) > 0 and g(0) = -delta < 0.
    lo = -(1.0 + delta)
    hi = 0.0
    if delta < 1.0:
        y = -math.sqrt(2.0 * delta)
    else:
        y = lo
    for _ in range(_MAX_ITER):
        g = math.expm1(y) - y - delta
        if g > 0.0:
            lo = y
        elif g < 0.0:
            hi = y
        else:
            break
        y_new = y - g / math.expm1(y)
        if not (lo < y_new < hi):
            y_new = 0.5 * (lo + hi)
        if abs(y_new - y) <= 4e-16 * abs(y):
            y = y_new
            break
        y = y_new
    return math.exp(y)


@njit(cache=True)
def _l_plus(delta):
    if delta == 0.0:
        return 1.0
    # Solve in x = L - 1 on [0, 2(delta + 2) - 1]; h(x) = x - log1p(x) - delta
    # is increasing for x > 0.
    lo = 0.0
    hi = 2.0 * (delta + 2.0) - 1.0
    if delta < 2.0:
        x = math.sqrt(2.0 * delta) + 2.0 * delta / 3.0
    else:
        x = delta + math.log1p(delta)
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        h = x - math.log1p(x) - delta
        if h < 0.0:
            lo = x
        elif h > 0.0:
            hi = x
        else:
            break
        x_new = x - h * (1.0 + x) / x
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4e-16 * abs(x):
            x = x_new
            break
        x = x_new
    return 1.0 + x


@njit(cache=True)
def _norm_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@njit(cache=True)
def _norm_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _check_delta(delta):
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0.0:
        raise ValueError(f"delta must be finite and >= 0, got {delta!r}")
    return delta


def l_minus(delta: float) -> float:
    """Smallest positive root of ``L - ln L - 1 = delta``; lies in (0, 1]."""
    return _l_minus(_check_delta(delta))


def l_plus(delta: float) -> float:
    """Largest positive root of ``L - ln L - 1 = delta``; lies in [1, inf)."""
    return _l_plus(_check_delta(delta))


def branch_residual(value: float, delta: float) -> float:
    """``value - ln(value) - 1 - delta`` evaluated without cancellation near 1."""
    if value < 0.5:
        return (value - math.log(value) - 1.0) - delta
    x = value - 1.0
    return (x - math.log1p(x)) - delta


def norm_cdf(z: float) -> float:
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z!r}")
    return _norm_cdf(z)


def norm_quantile(p):
    """Inverse of the standard normal CDF.

    Accepts a scalar or an array; every entry must lie strictly inside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("norm_quantile requires 0 < p < 1")
    out = special.ndtri(arr)
    if out.ndim == 0:
        return float(out)
    return out
