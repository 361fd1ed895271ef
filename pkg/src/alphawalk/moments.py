"""Exponential sums, 2p-th moments and the bounds they are compared with.

The central quantity is

    M_{2p}(m, n, h) = E | sum_{k=m+1}^{m+n} e(S_k h alpha) |^{2p},   e(t) = exp(2 pi i t).

It is computed three ways: exactly by expanding the power over ordered
partitions of [2p], exactly by enumerating every step sequence, and by Monte
Carlo over certified walk traces.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .alpha import dist_nearest_int, fractional_part
from .steps import as_dist, char_fn_2pi, sample
from .walk import choose_convergent, replica_rng, _fracparts

TWO_PI = 2.0 * math.pi
ULP = 2.0 ** -52


class GuardrailError(ValueError):
    """Exact enumeration requested beyond its supported size."""


@dataclass
class MomentRecord:
    m: int
    n: int
    p: int
    h: int
    value: float
    provenance: str  # monte-carlo, path-enumeration, partition-formula, closed-form-p1
    stderr: float = None
    replicas: int = None
    bound: float = None
    bound_kind: str = None
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self):
        if self.bound is None or not self.bound:
            return None
        return self.value / self.bound


# ---------------------------------------------------------------------------
# exponential sums from traces


def _harmonic_source(trace, h):
    """(points, per-term phase error) for harmonic h of a trace."""
    if h in trace.points:
        return trace.points[h], 1, trace.unit_error * h + 4.5e-16
    hmax = trace.config.precision_hmax or 0
    if 1 in trace.points and h <= hmax:
        return trace.points[1], h, h * (trace.unit_error + 4.5e-16)
    raise KeyError(f"harmonic {h} is not traced")


def exp_sum(trace, h, N, with_error=False):
    """sum_{k=1}^N e(S_k h alpha) from a trace; error <= 2 pi N (point error)."""
    if N == 0:
        return (0j, 0.0) if with_error else 0j
    if not 0 < N <= trace.length:
        raise ValueError("N outside the trace")
    x, mult, err = _harmonic_source(trace, h)
    val = complex(np.sum(np.exp(2j * np.pi * mult * x[:N])))
    bound = N * (TWO_PI * err + 4 * ULP)
    return (val, bound) if with_error else val


# ---------------------------------------------------------------------------
# exact moments


def closed_form_second_moment(z, n):
    """n + 2 Re sum_{d=1}^{n-1} (n - d) z^d."""
    z = complex(z)
    n = int(n)
    if n <= 0:
        return 0.0
    if abs(1 - z) < 0.1:
        # near z = 1 the closed form cancels badly; sum directly
        d = np.arange(1, n)
        return float(n + 2.0 * np.real(np.sum((n - d) * z ** d)))
    s = (n - (n + 1) * z + z ** (n + 1)) / (1 - z) ** 2 - n
    return float(n + 2.0 * s.real)


def ordered_partitions(k):
    """All ordered partitions of {1..k} as tuples of blocks (tuples)."""
    out = []
    items = list(range(1, k + 1))
    for s in range(1, k + 1):
        for labels in itertools.product(range(s), repeat=k):
            if len(set(labels)) != s:
                continue
            blocks = tuple(tuple(i for i, lab in zip(items, labels) if lab == j) for j in range(s))
            out.append(blocks)
    return out


def partition_coefficients(blocks):
    """(eps_j, c_j) for an ordered partition of [2p]."""
    eps = [sum(1 if i % 2 == 1 else -1 for i in blk) for blk in blocks]
    c = list(itertools.accumulate(eps[::-1]))[::-1]
    return eps, c


def increment_sum(w, m, n):
    """sum over m+1 <= l_1 < ... < l_s <= m+n of prod_j w_j^(l_j - l_{j-1}), l_0 = 0."""
    s = len(w)
    L = m + n
    if s > n:
        return 0j
    # F[l] = weight of tuples ending at l for the current depth
    F = np.zeros(L + 1, dtype=complex)
    w1 = complex(w[0])
    F[m + 1:] = w1 ** np.arange(m + 1, L + 1)
    for j in range(1, s):
        wj = complex(w[j])
        G = np.zeros(L + 1, dtype=complex)
        acc = 0j
        for ell in range(1, L + 1):
            # acc = sum_{l' < ell} F[l'] w^(ell - l')
            acc = wj * (acc + F[ell - 1])
            G[ell] = acc
        F = G
    return complex(F.sum())


def _phi_at_multiple(dist, alpha, k):
    """phi(2 pi k alpha) for an integer k, through a certified {k alpha}."""
    return complex(char_fn_2pi(dist, fractional_part(alpha, k, eta=1e-17)))


def moment_via_partitions(dist, alpha, h, m, n, p):
    """Exact E|sum e(S_k h alpha)|^{2p} from the ordered-partition expansion."""
    dist = as_dist(dist)
    if p > 3 or n > 12:
        raise GuardrailError("partition expansion limited to p <= 3, n <= 12")
    if p < 1 or n < 1 or m < 0:
        raise ValueError("need p, n >= 1 and m >= 0")
    phi_cache = {}

    def phi(c):
        if c not in phi_cache:
            phi_cache[c] = 1.0 + 0j if c == 0 else _phi_at_multiple(dist, alpha, c * h)
        return phi_cache[c]

    total = 0j
    for blocks in ordered_partitions(2 * p):
        if len(blocks) > n:
            continue
        _, c = partition_coefficients(blocks)
        total += increment_sum([phi(cj) for cj in c], m, n)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"even moment has imaginary residue {total.imag}")
    return MomentRecord(m, n, p, h, float(total.real), "partition-formula",
                        extra={"imag": total.imag})


def moment_second_closed(dist, alpha, h, n, m=0):
    """The p = 1 moment from the closed form; it does not depend on m."""
    z = _phi_at_multiple(as_dist(dist), alpha, -h)
    return MomentRecord(m, n, 1, h, closed_form_second_moment(z, n), "closed-form-p1")


def moment_via_paths(dist, alpha, h, m, n, p, max_paths=1 << 16):
    """Exact moment by enumerating every step sequence of a finite-support walk."""
    dist = as_dist(dist)
    if not dist.is_finite:
        raise GuardrailError("path enumeration needs a finite support")
    L = m + n
    k = len(dist.values)
    if k ** L > max_paths:
        raise GuardrailError("too many paths to enumerate")
    vals = np.array(dist.values, dtype=np.int64)
    probs = np.array(dist.probs)
    idx = np.array(list(itertools.product(range(k), repeat=L)), dtype=np.int64).reshape(-1, L)
    steps = vals[idx]
    weight = np.prod(probs[idx], axis=1)
    S = np.cumsum(steps, axis=1)[:, m:]
    # {S h alpha} for each distinct S value, certified
    uniq, inv = np.unique(S, return_inverse=True)
    fr = np.array([fractional_part(alpha, int(u) * h, eta=1e-17) for u in uniq])
    e = np.exp(2j * np.pi * fr[inv.reshape(S.shape)])
    mod = np.abs(e.sum(axis=1)) ** (2 * p)
    return MomentRecord(m, n, p, h, float(np.dot(weight, mod)), "path-enumeration")


# ---------------------------------------------------------------------------
# Monte Carlo


def batch_fracparts(dist, alpha, length, replicas, seed, harmonics, eta=1e-12, backend=None):
    """{S_k h alpha} for replicas 0..R-1 as (R, length) arrays, one per harmonic.

    Replica r draws its steps from the same stream as ``simulate(..., replica=r)``.
    Returns (dict h -> array, per-point error bound).
    """
    dist = as_dist(dist)
    rows = [sample(dist, replica_rng(seed, r), length) for r in range(replicas)]
    obj = any(r.dtype == object for r in rows)
    X = np.stack(rows).astype(object if obj else np.int64)
    S = np.cumsum(X, axis=1)
    max_abs = int(np.max(np.abs(S))) if S.size else 0
    hmax = max(harmonics)
    n = choose_convergent(alpha, max_abs, hmax, eta)
    p, q = alpha.pq(n)
    err = max_abs * hmax / (q * alpha.q(n + 1)) + 4.5e-16
    if not obj and q < kernels.LIMB_CAPACITY and np.abs(X).max() < kernels.STEP_CAPACITY:
        hi, lo = kernels.walk_residues(X, p, q, backend=backend)
        out = {}
        for h in harmonics:
            hh, ll = (hi, lo) if h == 1 else kernels.scale_residues(hi, lo, h, q, backend=backend)
            out[h] = kernels.residues_to_unit(hh, ll, q, backend=backend)
        return out, err
    out = {h: np.empty((replicas, length)) for h in harmonics}
    for i in range(replicas):
        pts = _fracparts(X[i], S[i], p, q, harmonics, backend=backend)
        for h in harmonics:
            out[h][i] = pts[h]
    return out, err


def mc_moment_sweep(dist, alpha, hs, ns, ps, replicas, seed, m=0, backend=None):
    """Monte Carlo moments for every (n, p, h), sharing one set of paths."""
    if replicas < 2:
        raise ValueError("need at least two replicas for a standard error")
    ns = sorted(int(n) for n in ns)
    hs = sorted(int(h) for h in hs)
    fr, err = batch_fracparts(dist, alpha, m + ns[-1], replicas, seed, hs, backend=backend)
    records = []
    for h in hs:
        e = np.exp(2j * np.pi * fr[h][:, m:])
        csum = np.cumsum(e, axis=1)
        for n in ns:
            a = np.abs(csum[:, n - 1])
            for p in ps:
                v = a ** (2 * p)
                mean = float(v.mean())
                se = float(v.std(ddof=1) / math.sqrt(replicas))
                records.append(MomentRecord(m, n, int(p), h, mean, "monte-carlo", se, replicas,
                                            extra={"point_error": err}))
    return records


def mc_moment(dist, alpha, h, m, n, p, replicas, seed, backend=None):
    """Monte Carlo estimate of E|sum e(S_k h alpha)|^{2p} with its standard error."""
    if replicas < 100:
        raise ValueError("mc_moment expects at least 100 replicas")
    return mc_moment_sweep(dist, alpha, [h], [n], [p], replicas, seed, m=m, backend=backend)[0]


# ---------------------------------------------------------------------------
# moment bounds


def _check_bound_args(n, p, c, dalpha):
    if not dalpha > 0:
        raise ZeroDivisionError("||d alpha|| = 0: d alpha is an integer")
    if n < 1 or p < 1 or not c > 0:
        raise ValueError("need n, p >= 1 and c > 0")


def log_bound_mom_i(n, p, c, dalpha, beta):
    """log of (8p)^{2p} max_{1<=r<=p} n^r / (r! (c ||d alpha||^beta)^{2p-r})."""
    _check_bound_args(n, p, c, dalpha)
    if not 0 < beta <= 2:
        raise ValueError("beta must lie in (0, 2]")
    lg = math.log(c) + beta * math.log(dalpha)
    terms = [r * math.log(n) - math.lgamma(r + 1) - (2 * p - r) * lg for r in range(1, p + 1)]
    return 2 * p * math.log(8 * p) + max(terms)


def log_bound_mom_ii(n, p, c, dalpha):
    """log of (4p)^{2p} sum_{r=0}^p n^r / (r! (c ||d alpha||)^{2p-r})."""
    _check_bound_args(n, p, c, dalpha)
    lg = math.log(c) + math.log(dalpha)
    terms = np.array([r * math.log(n) - math.lgamma(r + 1) - (2 * p - r) * lg for r in range(p + 1)])
    top = terms.max()
    return 2 * p * math.log(4 * p) + float(top + np.log(np.exp(terms - top).sum()))


def _exp_or_inf(v):
    return math.exp(v) if v < 709.0 else math.inf


def bound_mom_i(n, p, c, dalpha, beta):
    return _exp_or_inf(log_bound_mom_i(n, p, c, dalpha, beta))


def bound_mom_ii(n, p, c, dalpha):
    return _exp_or_inf(log_bound_mom_ii(n, p, c, dalpha))


def moment_bound(cert, alpha, h, n, p):
    """(bound kind, log bound) for the harmonic h alpha under a condition certificate."""
    dalpha, derr = dist_nearest_int(alpha, cert.d * h, 1e-15)
    if cert.kind == "first":
        return "mom(i)", log_bound_mom_i(n, p, cert.c, dalpha, cert.beta)
    return "mom(ii)", log_bound_mom_ii(n, p, cert.c, dalpha)


# ---------------------------------------------------------------------------
# the f_{m,n,s} lemma


@dataclass
class FmnsBound:
    x: tuple
    delta: float
    m: int
    n: int
    q: int
    K: float
    intervals: list
    value: float
    log_value: float


def f_mns_eval(x, m, n):
    """sum over m+1 <= l_1 < ... < l_s <= m+n of x_1^l_1 ... x_s^l_s."""
    x = [complex(v) for v in x]
    s = len(x)
    if s > 8 or n > 64:
        raise GuardrailError("direct evaluation limited to s <= 8, n <= 64")
    if s == 0 or s > n:
        return 0j
    ell = np.arange(m + 1, m + n + 1)
    # G[i] = sum over tuples of the first j variables ending at ell[i]
    G = np.power(x[0], ell)
    for j in range(1, s):
        prefix = np.concatenate([[0j], np.cumsum(G)[:-1]])
        G = np.power(x[j], ell) * prefix
    return complex(G.sum())


def near_one_intervals(x, delta):
    """All intervals [a, b] of [s] (1-based) with |1 - prod_{a..b} x_j| < delta."""
    s = len(x)
    out = []
    for a in range(s):
        prod = 1 + 0j
        for b in range(a, s):
            prod *= x[b]
            if abs(1 - prod) < delta:
                out.append((a + 1, b + 1))
    return out


def max_disjoint_intervals(intervals):
    """Earliest-endpoint greedy; optimal for interval scheduling."""
    chosen = []
    last = 0
    for a, b in sorted(intervals, key=lambda ab: (ab[1], ab[0])):
        if a > last:
            chosen.append((a, b))
            last = b
    return chosen


def f_mns_bound(x, delta, m, n):
    """K^{m+n+1} (2/delta)^s sum_{r<=q} (delta n)^r / r!."""
    x = [complex(v) for v in x]
    s = len(x)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if s > 8:
        raise GuardrailError("bound limited to s <= 8")
    chosen = max_disjoint_intervals(near_one_intervals(x, delta))
    q = len(chosen)
    suffix = [abs(math.prod(x[a:])) for a in range(s)]
    K = max([1.0] + suffix)
    terms = np.array([r * math.log(delta * n) - math.lgamma(r + 1) for r in range(q + 1)])
    top = terms.max()
    logv = ((m + n + 1) * math.log(K) + s * math.log(2 / delta)
            + float(top + np.log(np.exp(terms - top).sum())))
    return FmnsBound(tuple(x), delta, m, n, q, K, chosen, _exp_or_inf(logv), logv)


# ---------------------------------------------------------------------------
# Erdos-Turan


def erdos_turan_terms(trace, checkpoints, H, backend=None):
    """|T_h(N)| for h = 1..H and N in checkpoints, with per-entry error bounds.

    Uses the stored harmonic when all of 1..H are traced, otherwise builds
    the harmonics from the h = 1 points by repeated multiplication (the
    trace certificate must then cover H through ``precision_hmax``).
    """
    cps = np.asarray(checkpoints, dtype=np.int64)
    hs = np.arange(1, H + 1)
    if all(h in trace.points for h in hs):
        T = np.array([np.cumsum(np.exp(2j * np.pi * trace.points[h][:cps[-1]]))[cps - 1] for h in hs])
        perr = trace.unit_error * hs + 4.5e-16
    else:
        _harmonic_source(trace, H)  # raises if H is not covered
        T = kernels.harmonic_prefix_sums(trace.points[1], H, cps, backend=backend)
        perr = hs * (trace.unit_error + 4.5e-16) + 4 * hs * ULP
    err = np.outer(TWO_PI * perr, cps.astype(float))
    return np.abs(T), err


def erdos_turan_bound(trace, N, H, with_error=False):
    """(6/N) (N/H + sum_{h=1}^H |T_h(N)| / h)."""
    if H < 1 or not 0 < N <= trace.length:
        raise ValueError("need H >= 1 and 0 < N <= trace length")
    absT, err = erdos_turan_terms(trace, [N], H)
    return et_from_terms(absT[:, 0], err[:, 0], N, H, with_error)


def et_from_terms(absT, err, N, H, with_error=False):
    h = np.arange(1, H + 1)
    val = 6.0 / N * (N / H + float(np.sum(absT[:H] / h)))
    e = 6.0 / N * float(np.sum(err[:H] / h))
    return (val, e) if with_error else val
