"""Extreme and star discrepancy of finite point sets in [0, 1).

Intervals are half-open, [a, b).  For sorted points x_1 <= ... <= x_N,

    D_N  = max_i (i/N - x_i) + max_i (x_i - (i-1)/N)
    D*_N = max_i max(i/N - x_i, x_i - (i-1)/N)

D_N is a supremum and need not be attained (a single point gives D_1 = 1
only in the limit of shrinking intervals around it).
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .kernels import sorted_discrepancies


@dataclass(frozen=True)
class DiscrepancyValue:
    N: int
    extreme: float
    star: float


def _prepare(points):
    x = np.asarray(points, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("discrepancy of an empty point set")
    if np.any(x < 0) or np.any(x >= 1) or np.any(np.isnan(x)):
        raise ValueError("points must lie in [0, 1)")
    return np.sort(x, kind="stable")


def discrepancy(points, backend=None):
    x = _prepare(points)
    d, ds = sorted_discrepancies(x, backend=backend)
    return DiscrepancyValue(int(x.size), d, ds)


def extreme_discrepancy(points, backend=None):
    return discrepancy(points, backend).extreme


def star_discrepancy(points, backend=None):
    return discrepancy(points, backend).star


# ---------------------------------------------------------------------------
# brute-force oracles


def brute_extreme_discrepancy(points):
    """sup over [a, b) of |#{a <= x < b}/N - (b - a)| by endpoint enumeration.

    The deviation is piecewise linear in (a, b), so the supremum is reached
    as a and b approach point values (from either side) or 0 and 1.
    """
    x = _prepare(points)
    N = x.size
    # left endpoints: (position, count of points strictly left of the interval)
    lv = np.concatenate([[0.0], x, x])
    lc = np.concatenate([[0], np.searchsorted(x, x, "left"), np.searchsorted(x, x, "right")])
    lopen = np.concatenate([[False], np.zeros(N, bool), np.ones(N, bool)])
    # right endpoints: (position, count of points strictly left of b)
    rv = np.concatenate([[1.0], x, x])
    rc = np.concatenate([[N], np.searchsorted(x, x, "left"), np.searchsorted(x, x, "right")])
    rplus = np.concatenate([[False], np.zeros(N, bool), np.ones(N, bool)])
    length = rv[None, :] - lv[:, None]
    count = rc[None, :] - lc[:, None]
    valid = length > 0
    # [x, x+) is the degenerate interval holding exactly the points equal to x
    valid |= (length == 0) & ~lopen[:, None] & rplus[None, :]
    dev = np.abs(count / N - length)
    return float(dev[valid].max())


def brute_star_discrepancy(points):
    """sup over b of |#{x < b}/N - b| with b at point values, their right limits, and 1."""
    x = _prepare(points)
    N = x.size
    b = np.concatenate([x, x, [1.0]])
    c = np.concatenate([np.searchsorted(x, x, "left"), np.searchsorted(x, x, "right"), [N]])
    return float(np.abs(c / N - b).max())


# ---------------------------------------------------------------------------
# the empty-gap diagnostic


def _ceil_double(fr):
    """Smallest double v with Fraction(v) >= fr."""
    v = float(fr)
    while Fraction(v) < fr:
        v = np.nextafter(v, np.inf)
    while Fraction(float(np.nextafter(v, -np.inf))) >= fr:
        v = float(np.nextafter(v, -np.inf))
    return float(v)


def gap_diagnostic(points, q, margin=0.0):
    """Number of points in [1/(3q), 2/(3q)).

    The comparison with the endpoints is exact for double inputs.  With
    ``margin > 0`` the interval is widened by that much on both sides, so a
    zero count also covers points known only up to an error of ``margin``.
    """
    q = int(q)
    if q < 1:
        raise ValueError("q must be a positive integer")
    x = np.asarray(points, dtype=np.float64).ravel()
    if x.size == 0:
        return 0
    lo = Fraction(1, 3 * q) - Fraction(margin)
    hi = Fraction(2, 3 * q) + Fraction(margin)
    inside = x >= _ceil_double(lo) if lo > 0 else np.ones(x.size, bool)
    inside &= x < _ceil_double(hi)
    if margin > 0 and lo <= 0:
        # the widened window wraps below 0 on the circle
        inside |= x >= _ceil_double(1 + lo)
    return int(np.count_nonzero(inside))
