"""Diophantine sums sum_{h=1}^H 1 / (h ||h alpha||^b) and their block structure.

All distances come from residues h p mod q of a convergent p/q, with the
real-line error h / (q q') per term.  Terms whose relative error is not yet
below the target (h near a multiple of a convergent denominator, where
||h alpha|| is tiny) are redone individually on a deeper convergent.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .alpha import DepthExhaustedError, dist_nearest_int_exact, estimate_strong_type

MAX_TERMS = 1 << 23


class InsufficientRangeError(ValueError):
    """Too few dyadic levels for a growth fit."""


def _check_b(b):
    if not 0 < b <= 1:
        raise ValueError("b must lie in (0, 1]")


def term_distances(alpha, h0, h1, eta=1e-10, b=1.0):
    """||h alpha|| for h = h0..h1 as floats, with per-term relative error of 1/||h alpha||^b.

    Returns (h array, distances, relative error bound per term).
    """
    h0, h1 = int(h0), int(h1)
    if h0 < 1 or h1 < h0:
        raise ValueError("need 1 <= h0 <= h1")
    count = h1 - h0 + 1
    if count > MAX_TERMS:
        raise ValueError(f"refusing more than {MAX_TERMS} terms")
    n = alpha.index_for(lambda q: q * q >= (h1 << 48), start=2)
    p, q = alpha.pq(n)
    while q >= kernels.LIMB_CAPACITY and n > 2:
        # stay on the limb kernels; local deepening fixes the terms that need it
        n -= 1
        p, q = alpha.pq(n)
    qq = q * alpha.q(n + 1)
    steps = np.ones(count, dtype=np.int64)
    steps[0] = h0
    hi, lo = kernels.walk_residues(steps, p, q)
    d = kernels.residue_distance(hi, lo, q)
    hs = np.arange(h0, h1 + 1, dtype=np.float64)
    abs_err = hs / float(qq) + 4.5e-16 * d
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(d > abs_err, b * abs_err / (d - abs_err), np.inf) + 1e-15
    bad = np.nonzero(rel > eta / 4)[0]
    for i in bad:
        h = h0 + int(i)
        # ask for ||h alpha|| to a relative accuracy well below eta
        target = max(float(d[i]), 1e-300) * eta / (16 * b)
        val, cert = dist_nearest_int_exact(alpha, h, target)
        dv = float(val)
        if not dv > 0:
            raise DepthExhaustedError(f"could not separate ||{h} alpha|| from 0")
        d[i] = dv
        rel[i] = b * (float(cert) + 2.3e-16 * dv) / (dv - float(cert)) + 1e-15
    return np.arange(h0, h1 + 1, dtype=np.int64), d, rel


def _terms(alpha, h0, h1, b, eta):
    hs, d, rel = term_distances(alpha, h0, h1, eta, b)
    return 1.0 / (hs.astype(np.float64) * d ** b), rel


@dataclass
class DiophSumValue:
    H: int
    b: float
    value: float
    rel_err: float


def dioph_sum(alpha, H, b, eta=1e-10):
    """sum_{h=1}^H 1 / (h ||h alpha||^b) with a certified relative error."""
    _check_b(b)
    if H < 1:
        raise ValueError("empty sum: H must be at least 1")
    t, rel = _terms(alpha, 1, H, b, eta)
    # every term is positive, so the total relative error is at most the worst term's
    return DiophSumValue(int(H), float(b), math.fsum(t), float(rel.max()) + 1e-15)


def dioph_sum_levels(alpha, Hs, b, eta=1e-10):
    """dioph_sum at each H in an increasing list, from one pass over the terms."""
    _check_b(b)
    Hs = sorted(int(H) for H in Hs)
    t, rel = _terms(alpha, 1, Hs[-1], b, eta)
    out = []
    prev, acc, worst = 0, 0.0, 0.0
    parts = []
    for H in Hs:
        parts.append(math.fsum(t[prev:H]))
        worst = max(worst, float(rel[prev:H].max()) if H > prev else 0.0)
        acc = math.fsum(parts)
        out.append(DiophSumValue(H, float(b), acc, worst + 1e-15))
        prev = H
    return out


# ---------------------------------------------------------------------------
# block decomposition


@dataclass
class BlockRecord:
    k: int
    q_k: int
    q_next: int
    count_a: int
    count_b: int
    count_c: int
    sum_a: float
    sum_b: float
    sum_c: float

    @property
    def total(self):
        return math.fsum([self.sum_a, self.sum_b, self.sum_c])


@dataclass
class DiophSumReport:
    alpha: str
    b: float
    n: int
    head: float
    blocks: list
    total: float
    rel_err: float
    log_s_qn: float
    convergent_sum: float
    members: dict = field(default_factory=dict, repr=False)


def classify_block(alpha, k):
    """Labels 'A', 'B', 'C' for h in [q_k, q_{k+1}).

    A: h p_k = 0 (mod q_k), i.e. h a multiple of q_k.
    B: h p_k = (-1)^k (mod q_k), equivalently h = q_{k-1} (mod q_k).
    """
    p_k, q_k = alpha.pq(k)
    q_next = alpha.q(k + 1)
    h = np.arange(q_k, q_next, dtype=object)
    r = (h * p_k) % q_k
    target_b = (-1) ** k % q_k
    labels = np.full(len(h), "C")
    labels[r == target_b] = "B"
    labels[r == 0] = "A"
    return np.arange(q_k, q_next, dtype=np.int64), labels


def dioph_sum_blocks(alpha, n_blocks, b, eta=1e-10):
    """Block sums over [q_k, q_{k+1}) for 3 <= k < n, split into classes A, B, C.

    ``n_blocks`` is the convergent index n; the blocks plus the head
    h < q_3 cover 1 <= h <= q_n - 1.
    """
    _check_b(b)
    n = int(n_blocks)
    if n < 3:
        raise ValueError("n_blocks must be at least 3")
    qn = alpha.q(n)
    if qn - 1 > MAX_TERMS:
        raise ValueError(f"q_{n} - 1 = {qn - 1} terms exceeds the {MAX_TERMS} term cap")
    t, rel = _terms(alpha, 1, qn - 1, b, eta) if qn > 1 else (np.zeros(0), np.zeros(1))
    q3 = alpha.q(3)
    head = math.fsum(t[: q3 - 1])
    blocks = []
    members = {}
    for k in range(3, n):
        hs, labels = classify_block(alpha, k)
        seg = t[hs - 1]
        sums = {c: math.fsum(seg[labels == c]) for c in "ABC"}
        counts = {c: int(np.count_nonzero(labels == c)) for c in "ABC"}
        blocks.append(BlockRecord(k, alpha.q(k), alpha.q(k + 1), counts["A"], counts["B"],
                                  counts["C"], sums["A"], sums["B"], sums["C"]))
        members[k] = {c: hs[labels == c] for c in "AB"}
    total = math.fsum([head] + [blk.total for blk in blocks])
    s = 2 if b == 1 else 1
    log_s = math.log(qn) ** s
    csum = 0.0
    for k in range(1, n):
        dk, _ = dist_nearest_int_exact(alpha, alpha.q(k), 1e-30)
        csum += 1.0 / (alpha.q(k) * float(dk) ** b)
    return DiophSumReport(alpha.spec, float(b), n, head, blocks, total,
                          float(rel.max()) + 1e-15, log_s, csum, members)


# ---------------------------------------------------------------------------
# growth regimes


@dataclass
class GrowthFit:
    regime: str  # "log" or "power"
    b: float
    gamma_hat: float
    levels: list
    sums: list
    s: int = None
    ratios: list = None
    ratio_spread: float = None
    slope: float = None
    predicted_slope: float = None
    residual: float = None


def growth_fit(alpha, b, levels=range(6, 21), top=4, min_level=6, eta=1e-10):
    """Fit the growth of the sum over dyadic H = 2^level.

    When the estimated strong type is at most 1/b the sum should grow like
    log^s H (s = 1 for b < 1, s = 2 for b = 1) and the spread max/min of
    sum / log^s H over the top levels is reported.  Otherwise the least
    squares slope of log(sum) against log H over levels >= ``min_level`` is
    reported next to the predicted b gamma - 1.
    """
    _check_b(b)
    levels = sorted(int(v) for v in levels)
    if len(levels) < 6:
        raise InsufficientRangeError("need at least 6 dyadic levels")
    Hs = [1 << v for v in levels]
    vals = dioph_sum_levels(alpha, Hs, b, eta)
    sums = [v.value for v in vals]
    depth = max(3, alpha.index_for(lambda q: q > Hs[-1], start=2))
    gamma_hat = estimate_strong_type(alpha, depth).gamma_hat
    fit = GrowthFit("log" if gamma_hat <= 1.0 / b else "power", float(b), gamma_hat, levels, sums)
    if fit.regime == "log":
        s = 2 if b == 1 else 1
        r = [S / math.log(H) ** s for H, S in zip(Hs[-top:], sums[-top:])]
        fit.s, fit.ratios, fit.ratio_spread = s, r, max(r) / min(r)
    else:
        sel = [i for i, v in enumerate(levels) if v >= min_level]
        if len(sel) < 2:
            raise InsufficientRangeError("need two levels at or above the minimum")
        x = np.log([Hs[i] for i in sel])
        y = np.log([sums[i] for i in sel])
        coef, res, *_ = np.polyfit(x, y, 1, full=True)
        fit.slope = float(coef[0])
        fit.predicted_slope = b * gamma_hat - 1
        fit.residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return fit
