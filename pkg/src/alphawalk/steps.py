"""Integer step distributions and their characteristic functions.

Four families are supported, parsed from the grammar

    twopoint:a,b,w | pmf:[(v,p),...] | zeta:beta | symzeta:beta

``twopoint:a,b,w`` puts mass w on a and 1 - w on b.  ``zeta:beta`` has
P(X = n) = n^-(1+beta) / zeta(1+beta) on n >= 1 and ``symzeta:beta`` splits
that mass evenly between n and -n.

The module also carries grid certifiers for the two non-flatness conditions
on phi(2 pi x) used by the moment bounds:

    first(beta):  1 - |phi(2 pi x)| >= c ||d x||^beta
    second:       |phi(2 pi x) - phi(2 pi y)| >= c ||d (x - y)||
"""

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import optimize, special


class DistributionSpecError(ValueError):
    """Malformed distribution text or parameters."""


class DegenerateDistributionError(ValueError):
    """The distribution is a point mass, so |phi| is identically 1."""


class UnsupportedDistributionError(ValueError):
    """The operation needs a moment the distribution does not have."""


TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# zeta-tail helpers


def _tail_sum(s, n):
    """sum_{k >= n} k^-s (Hurwitz zeta), vectorized over n."""
    return special.zeta(s, n)


@lru_cache(maxsize=None)
def _polylog_coeffs(s, terms=80):
    """Coefficients for Li_s(e^{it}) near t = 0.

    For non-integer s and |t| < 2 pi:
        Li_s(e^{it}) = Gamma(1 - s) (-it)^(s-1) + sum_k zeta(s - k) (it)^k / k!
    For integer s = m the k = m - 1 term is replaced by
        (it)^(m-1) / (m-1)! * (H_{m-1} - log(-it)).
    Returned as (kind, singular coefficient, series coefficients in powers of i t).
    """
    with mpmath.workdps(40):
        sm = mpmath.mpf(s)
        m = int(round(s))
        integer = abs(s - m) < 1e-15
        coeffs = []
        for k in range(terms):
            if integer and k == m - 1:
                coeffs.append(complex(mpmath.harmonic(m - 1) / mpmath.factorial(k)))
            else:
                coeffs.append(complex(mpmath.zeta(sm - k) / mpmath.factorial(k)))
        if integer:
            sing = complex(-1 / mpmath.factorial(m - 1))
        else:
            sing = complex(mpmath.gamma(1 - sm))
    return integer, m, sing, np.array(coeffs)


def polylog_unit(s, t):
    """Li_s(e^{it}) for real t (array), s > 1, double precision."""
    shape = np.shape(t)
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    # reduce to [-pi, pi]; the series converges like 2^-k there
    tr = t - TWO_PI * np.round(t / TWO_PI)
    integer, m, sing, c = _polylog_coeffs(float(s))
    z = 1j * tr
    acc = np.zeros_like(z)
    for ck in c[::-1]:
        acc = acc * z + ck
    nz = tr != 0
    w = np.zeros_like(z)
    if integer:
        w[nz] = sing * z[nz] ** (m - 1) * np.log(-z[nz])
    else:
        w[nz] = sing * (-z[nz]) ** (s - 1)
    return (acc + w).reshape(shape)


# ---------------------------------------------------------------------------
# the distribution


@dataclass(frozen=True)
class IntegerStepDistribution:
    kind: str  # "pmf", "zeta" or "symzeta"
    values: tuple = ()
    probs: tuple = ()
    beta: float = 0.0
    text: str = ""
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __str__(self):
        return self.text

    # ---- construction

    @classmethod
    def finite(cls, pairs, text=None):
        merged = {}
        for v, p in pairs:
            if int(v) != v:
                raise DistributionSpecError(f"support value {v} is not an integer")
            p = float(p)
            if not p > 0:
                raise DistributionSpecError("probabilities must be positive")
            merged[int(v)] = merged.get(int(v), 0.0) + p
        if not merged:
            raise DistributionSpecError("empty support")
        total = math.fsum(merged.values())
        if abs(total - 1.0) > 1e-9:
            raise DistributionSpecError(f"probabilities sum to {total}, not 1")
        vals = tuple(sorted(merged))
        probs = tuple(merged[v] / total for v in vals)
        if text is None:
            text = "pmf:[" + ",".join(f"({v},{p!r})" for v, p in zip(vals, probs)) + "]"
        return cls("pmf", vals, probs, text=text)

    @classmethod
    def twopoint(cls, a, b, w):
        w = float(w)
        if not 0 < w < 1:
            raise DistributionSpecError("two-point weight must lie in (0, 1)")
        return cls.finite([(a, w), (b, 1 - w)], text=f"twopoint:{a},{b},{w!r}")

    @classmethod
    def zeta(cls, beta, symmetric=False):
        beta = float(beta)
        if not beta > 0:
            raise DistributionSpecError("zeta tail needs beta > 0")
        kind = "symzeta" if symmetric else "zeta"
        return cls(kind, beta=beta, text=f"{kind}:{beta!r}")

    # ---- basic facts

    @property
    def is_finite(self):
        return self.kind == "pmf"

    @property
    def s(self):
        return 1.0 + self.beta

    @property
    def normalizer(self):
        """zeta(1 + beta) for the zeta families."""
        if "norm" not in self._cache:
            self._cache["norm"] = float(special.zeta(self.s, 1))
        return self._cache["norm"]

    def pmf(self, k):
        k = int(k)
        if self.kind == "pmf":
            try:
                return self.probs[self.values.index(k)]
            except ValueError:
                return 0.0
        if self.kind == "zeta":
            return k ** -self.s / self.normalizer if k >= 1 else 0.0
        return 0.5 * abs(k) ** -self.s / self.normalizer if k != 0 else 0.0

    def tail_mass(self, x):
        """P(X >= x) for the zeta family, P(|X| >= x) for symzeta."""
        if self.kind == "pmf":
            return math.fsum(p for v, p in zip(self.values, self.probs) if v >= x)
        n = max(1, math.ceil(x))
        return float(_tail_sum(self.s, n)) / self.normalizer

    def support_iter(self):
        """Support values in a fixed enumeration order."""
        if self.kind == "pmf":
            yield from self.values
            return
        n = 1
        while True:
            yield n
            if self.kind == "symzeta":
                yield -n
            n += 1

    @property
    def mean(self):
        """E X, or None when undefined."""
        if self.kind == "pmf":
            return math.fsum(v * p for v, p in zip(self.values, self.probs))
        if self.beta <= 1:
            return None
        if self.kind == "symzeta":
            return 0.0
        return float(special.zeta(self.beta, 1)) / self.normalizer

    @property
    def abs_mean(self):
        """E|X| (inf when divergent)."""
        if self.kind == "pmf":
            return math.fsum(abs(v) * p for v, p in zip(self.values, self.probs))
        if self.beta <= 1:
            return math.inf
        return float(special.zeta(self.beta, 1)) / self.normalizer

    @property
    def second_moment(self):
        """E X^2 (inf when divergent)."""
        if self.kind == "pmf":
            return math.fsum(v * v * p for v, p in zip(self.values, self.probs))
        if self.beta <= 2:
            return math.inf
        return float(special.zeta(self.beta - 1, 1)) / self.normalizer

    @property
    def variance(self):
        m2 = self.second_moment
        if math.isinf(m2):
            return math.inf
        return max(0.0, m2 - self.mean ** 2)

    @property
    def median(self):
        """Smallest m with P(X <= m) >= 1/2."""
        if self.kind == "pmf":
            acc = 0.0
            for v, p in zip(self.values, self.probs):
                acc += p
                if acc >= 0.5 - 1e-15:
                    return v
            return self.values[-1]
        if self.kind == "symzeta":
            return -1
        n = 1
        while self.tail_mass(n + 1) > 0.5:
            n += 1
        return n

    @property
    def is_degenerate(self):
        return self.kind == "pmf" and len(self.values) == 1

    def support_gcd(self):
        g = 0
        for i, v in enumerate(self.support_iter()):
            g = math.gcd(g, v)
            if i > 64 or (self.is_finite and i == len(self.values) - 1):
                break
        return g


def parse_dist(text):
    """Parse the distribution grammar into an :class:`IntegerStepDistribution`."""
    t = text.strip().replace(" ", "")
    if t.startswith("twopoint:"):
        parts = t[len("twopoint:"):].split(",")
        if len(parts) != 3:
            raise DistributionSpecError("twopoint needs a,b,w")
        try:
            return IntegerStepDistribution.twopoint(int(parts[0]), int(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise DistributionSpecError(str(exc)) from None
    if t.startswith("pmf:"):
        body = t[len("pmf:"):]
        if not (body.startswith("[") and body.endswith("]")):
            raise DistributionSpecError("pmf needs [(v,p),...]")
        pairs = re.findall(r"\(([^,()]+),([^,()]+)\)", body)
        if not pairs or re.sub(r"\([^()]*\)", "", body[1:-1]).strip(","):
            raise DistributionSpecError(f"cannot parse pmf body {body!r}")
        try:
            return IntegerStepDistribution.finite(
                [(int(v), float(p)) for v, p in pairs], text=None)
        except ValueError as exc:
            raise DistributionSpecError(str(exc)) from None
    for prefix, sym in (("zeta:", False), ("symzeta:", True)):
        if t.startswith(prefix):
            try:
                beta = float(t[len(prefix):])
            except ValueError:
                raise DistributionSpecError(f"bad beta in {text!r}") from None
            return IntegerStepDistribution.zeta(beta, symmetric=sym)
    raise DistributionSpecError(f"cannot parse distribution spec {text!r}")


def as_dist(d):
    return parse_dist(d) if isinstance(d, str) else d


# ---------------------------------------------------------------------------
# characteristic function


def char_fn(dist, t):
    """phi(t) = E exp(i t X), vectorized over t."""
    dist = as_dist(dist)
    t_arr = np.asarray(t, dtype=float)
    if dist.kind == "pmf":
        v = np.array(dist.values, dtype=float)
        p = np.array(dist.probs)
        # reduce t mod 2 pi first: integer support makes phi 2 pi periodic
        tr = np.remainder(t_arr, TWO_PI)
        out = np.exp(1j * np.multiply.outer(tr, v)) @ p
    else:
        li = polylog_unit(dist.s, t_arr)
        if dist.kind == "symzeta":
            li = li.real.astype(complex)
        out = li / dist.normalizer
    return complex(out) if np.ndim(t) == 0 else out


def char_fn_2pi(dist, x):
    """phi(2 pi x)."""
    return char_fn(dist, TWO_PI * np.asarray(x, dtype=float))


def tail_ratio_sup(dist, beta, grid_n=4096):
    """max over the grid t in (0, 1] of |1 - phi(t)| / t^beta."""
    t = np.arange(1, grid_n + 1) / grid_n
    r = np.abs(1.0 - char_fn(dist, t)) / t ** beta
    return float(r.max())


# ---------------------------------------------------------------------------
# gcd of differences


def support_gcd_diff(dist, window=32):
    """gcd of {x - y : x != y in the support}.

    For infinite supports the running gcd is accepted once it has stayed
    unchanged over ``window`` further support values.
    """
    dist = as_dist(dist)
    if dist.is_degenerate:
        raise DegenerateDistributionError("point mass has no differences")
    it = dist.support_iter()
    first = next(it)
    g, stable = 0, 0
    for v in it:
        ng = math.gcd(g, v - first)
        stable = stable + 1 if ng == g else 0
        g = ng
        if not dist.is_finite and g and stable >= window:
            break
    return g


# ---------------------------------------------------------------------------
# sampling


TABLE_SIZE = 1 << 20


@lru_cache(maxsize=16)
def _zeta_tail_table(s, size):
    # G[k] = sum_{j >= k + 1} j^-s for k = 0 .. size, so P(X >= n) = G[n-1] / zeta(s)
    n = np.arange(1, size + 2, dtype=float)
    G = special.zeta(s, n)
    return G / G[0]


def _zeta_tail_inverse(s, norm, u):
    """Largest n with P(X >= n) >= u, for u below the table range."""
    u = np.asarray(u, dtype=float)
    target = u * norm
    lo = np.full(u.shape, math.log(TABLE_SIZE))
    hi = lo.copy()
    # doubling in log space until the tail mass drops below target
    while True:
        bad = special.zeta(s, np.exp(hi)) >= target
        if not bad.any():
            break
        hi = np.where(bad, hi + math.log(2.0) * 8, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ge = special.zeta(s, np.exp(mid)) >= target
        lo = np.where(ge, mid, lo)
        hi = np.where(ge, hi, mid)
        if np.all(hi - lo < 1e-15):
            break
    out = []
    for x, tv in zip(np.exp(lo), target):
        n = int(x)
        if n < 1 << 53:
            while n > 1 and special.zeta(s, n) < tv:
                n -= 1
            while special.zeta(s, n + 1) >= tv:
                n += 1
        out.append(n)
    return out


def _pack(vals):
    vals = list(vals)
    if all(-(1 << 62) < v < (1 << 62) for v in vals):
        return np.array(vals, dtype=np.int64)
    arr = np.empty(len(vals), dtype=object)
    arr[:] = vals
    return arr


def sample(dist, rng, size=None):
    """Exact inverse-CDF draws.

    ``rng`` is a ``numpy.random.Generator``.  Returns an int for ``size=None``,
    else an int64 array (an object array of Python ints if any magnitude
    reaches 2**62).
    """
    dist = as_dist(dist)
    n = 1 if size is None else int(size)
    if dist.kind == "pmf":
        vals = np.array(dist.values, dtype=np.int64)
        if len(vals) == 1:
            out = np.full(n, vals[0], dtype=np.int64)
        else:
            cum = np.cumsum(dist.probs)
            idx = np.searchsorted(cum, rng.random(n), side="right")
            out = vals[np.minimum(idx, len(vals) - 1)]
    else:
        s = dist.s
        # u in (0, 1]; X = n iff P(X >= n + 1) < u <= P(X >= n)
        u = 1.0 - rng.random(n)
        signs = None
        if dist.kind == "symzeta":
            signs = rng.integers(0, 2, size=n)
        G = _zeta_tail_table(s, TABLE_SIZE)
        k = np.searchsorted(-G, -u, side="right")  # number of G entries >= u
        out = k.astype(np.int64)
        deep = np.nonzero(k > TABLE_SIZE)[0]
        if deep.size:
            extra = _zeta_tail_inverse(s, dist.normalizer, u[deep])
            big = max(extra) >= 1 << 62
            if big:
                out = out.astype(object)
            for i, v in zip(deep, extra):
                out[i] = v
        if signs is not None:
            if out.dtype == object:
                out = np.array([-v if sg else v for v, sg in zip(out, signs)], dtype=object)
            else:
                out = np.where(signs == 1, -out, out)
    if size is None:
        return int(out[0])
    return out


# ---------------------------------------------------------------------------
# condition certificates


CERT_FLOOR = 1e-9


@dataclass
class ConditionCertificate:
    kind: str  # "first" or "second"
    d: int
    c: float
    grid_n: int
    argmin: tuple
    verdict: str  # "certified", "failed" or "inconclusive"
    beta: float = None
    note: str = ""
    per_d: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict == "certified"

    def as_dict(self):
        out = {
            "kind": self.kind, "d": self.d, "c": self.c, "grid_n": self.grid_n,
            "argmin": list(self.argmin), "verdict": self.verdict,
        }
        if self.beta is not None:
            out["beta"] = self.beta
        if self.note:
            out["note"] = self.note
        if self.per_d:
            out["per_d"] = {str(k): v for k, v in self.per_d.items()}
        return out


def _circ(y):
    y = np.asarray(y, dtype=float)
    f = y - np.floor(y)
    return np.minimum(f, 1.0 - f)


def verify_first_condition(dist, beta, grid_n=4096):
    """Grid certificate for 1 - |phi(2 pi x)| >= c ||d x||^beta.

    Works in y = d x over (0, 1), the period of |phi(2 pi x)|.  Grid points
    y = i / grid_n are all outside the guard band of width 1/(4 grid_n)
    around the integers; the smallest ratio is refined by a bounded scalar
    minimization inside the neighbouring cells, clipped to the guard band.
    """
    dist = as_dist(dist)
    if not 0 < beta <= 2:
        raise ValueError("beta must lie in (0, 2]")
    d = support_gcd_diff(dist)
    guard = 1.0 / (4 * grid_n)

    def ratio(y):
        y = np.asarray(y, dtype=float)
        return (1.0 - np.abs(char_fn_2pi(dist, y / d))) / _circ(y) ** beta

    y = np.arange(1, grid_n) / grid_n
    r = ratio(y)
    i = int(np.argmin(r))
    c, arg = float(r[i]), float(y[i])
    lo = max(guard, y[i] - 1.0 / grid_n)
    hi = min(1.0 - guard, y[i] + 1.0 / grid_n)
    res = optimize.minimize_scalar(lambda v: float(ratio(v)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    if res.fun < c:
        c, arg = float(res.fun), float(res.x)
    # the band edges themselves
    for e in (guard, 1.0 - guard):
        v = float(ratio(e))
        if v < c:
            c, arg = v, e
    verdict, note = _verdict(c, arg, guard, lambda v: float(ratio(v)))
    return ConditionCertificate("first", d, c, grid_n, (arg / d,), verdict, beta=beta, note=note)


def _verdict(c, arg, guard, f):
    if not c > CERT_FLOOR:
        return "failed", "grid minimum below floor away from the zero set"
    dist_edge = min(arg, 1.0 - arg)
    if dist_edge <= 2 * guard:
        # minimum sits at the guard band: check whether the ratio keeps
        # falling toward the zero set, in which case c may be 0 in the limit
        e = guard if arg < 0.5 else 1.0 - guard
        e2 = 2 * guard if arg < 0.5 else 1.0 - 2 * guard
        slope = math.log2(f(e2) / f(e)) if f(e) > 0 else math.inf
        if slope > 0.05:
            return "inconclusive", f"ratio decays toward the zero set (local log2 slope {slope:.3f})"
    return "certified", ""


def verify_second_condition(dist, grid_n=512, d_max=8):
    """Grid certificate for |phi(2 pi x) - phi(2 pi y)| >= c ||d (x - y)||.

    For each d = 1..d_max the ratio is minimized on the torus grid
    x = i / grid_n, x - y = j / grid_n (pairs within half a cell of the zero
    set of ||d (x - y)|| are skipped), then refined by a local 2-D search
    around the smallest grid values.  The largest certified c wins.
    """
    dist = as_dist(dist)
    if dist.is_degenerate:
        raise DegenerateDistributionError("point mass has no differences")
    if not math.isfinite(dist.abs_mean):
        raise UnsupportedDistributionError("second condition needs E|X| finite")
    xs = np.arange(grid_n) / grid_n
    phi = char_fn_2pi(dist, xs)
    j = np.arange(1, grid_n)
    idx = (np.arange(grid_n)[:, None] + j[None, :]) % grid_n
    num = np.abs(phi[:, None] - phi[idx])
    results = {}
    best = None
    for d in range(1, d_max + 1):
        guard = d / (2.0 * grid_n)
        den = _circ(d * j / grid_n)
        keep = den >= guard
        if not keep.any():
            continue
        r = num[:, keep] / den[keep][None, :]
        jk = j[keep]
        c, arg = _refine_second(dist, d, r, jk, grid_n, guard)
        verdict = "certified" if c > CERT_FLOOR else "failed"
        results[d] = {"c": c, "verdict": verdict, "argmin": list(arg)}
        if verdict == "certified" and (best is None or c > best[1]):
            best = (d, c, arg)
    if best is None:
        d0 = min(results, key=lambda k: -results[k]["c"]) if results else 1
        info = results.get(d0, {"c": 0.0, "argmin": [0.0, 0.0]})
        return ConditionCertificate("second", d0, info["c"], grid_n, tuple(info["argmin"]),
                                    "failed", per_d=results)
    d, c, arg = best
    return ConditionCertificate("second", d, c, grid_n, tuple(arg), "certified", per_d=results)


def _refine_second(dist, d, r, jk, grid_n, guard, n_starts=6):
    flat = np.argsort(r, axis=None)[: n_starts * 4]
    c = float(r.flat[flat[0]])
    i0, k0 = np.unravel_index(flat[0], r.shape)
    arg = (i0 / grid_n, (i0 + jk[k0]) / grid_n)

    def f(v):
        x, u = v
        den = float(_circ(d * u))
        if den < guard:
            return math.inf
        return abs(char_fn_2pi(dist, x) - char_fn_2pi(dist, x + u)) / den

    seen = []
    for flat_i in flat:
        i, k = np.unravel_index(flat_i, r.shape)
        start = (i / grid_n, jk[k] / grid_n)
        if any(abs(start[0] - a) < 2.0 / grid_n and abs(start[1] - b) < 2.0 / grid_n for a, b in seen):
            continue
        seen.append(start)
        if len(seen) > n_starts:
            break
        h = 1.0 / grid_n
        res = optimize.minimize(f, start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13,
                                         "initial_simplex": [start, (start[0] + h, start[1]),
                                                             (start[0], start[1] + h)]})
        if res.fun < c:
            c = float(res.fun)
            arg = (float(res.x[0]) % 1.0, float(res.x[0] + res.x[1]) % 1.0)
    return c, arg
