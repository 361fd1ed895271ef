"""Irrational numbers given by continued fractions, with exact convergents.

An :class:`AlphaHandle` never stores alpha as a float.  Convergents
``p_n / q_n = [a0; a1, ..., a_{n-1}]`` are built with the recurrences

    q_{n+1} = a_n q_n + q_{n-1},  q_0 = 0, q_1 = 1
    p_{n+1} = a_n p_n + p_{n-1},  p_0 = 1, p_1 = a0

so that ``q_2 = a_1``.  Every quantity derived from alpha (distances to the
nearest integer, fractional parts) goes through these integers and carries
an explicit error bound.
"""

import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpz


class InvalidSourceError(ValueError):
    """A partial-quotient source is malformed or emitted a bad quotient."""


class DepthExhaustedError(LookupError):
    """A finite partial-quotient list ran out before the requested depth."""


# ---------------------------------------------------------------------------
# partial quotient sources


def _e_quotient(n):
    # e = [2; 1, 2, 1, 1, 4, 1, 1, 6, ...]
    return 2 * (n + 1) // 3 if n % 3 == 2 else 1


def _ceil_power(q, exponent):
    """Exact ``ceil(q ** exponent)`` for an integer q >= 1 and rational exponent."""
    if q == 1:
        return 1
    e = Fraction(exponent)
    num, den = e.numerator, e.denominator
    if num < 0:
        raise InvalidSourceError("negative exponent in power rule")
    if den == 1:
        return q ** num
    base = q ** num
    root = _iroot(base, den)
    return root if root ** den == base else root + 1


def _iroot(n, k):
    # floor of the k-th root of n
    return int(gmpy2.iroot(mpz(n), k)[0])


@dataclass(frozen=True)
class PartialQuotientSource:
    """Where the partial quotients a_1, a_2, ... come from.

    ``kind`` is one of ``"periodic"``, ``"explicit"``, ``"preset"`` or
    ``"power"``.  Use the classmethod constructors rather than building one
    by hand.
    """

    kind: str
    a0: int = 0
    values: tuple = ()
    name: str = ""
    gamma: Fraction = Fraction(1)

    @classmethod
    def periodic(cls, a0, period):
        period = tuple(int(a) for a in period)
        if not period:
            raise InvalidSourceError("empty period")
        src = cls("periodic", int(a0), period)
        src._check(period)
        return src

    @classmethod
    def explicit(cls, a0, values):
        values = tuple(int(a) for a in values)
        src = cls("explicit", int(a0), values)
        src._check(values)
        return src

    @classmethod
    def preset(cls, name):
        if name == "golden":
            return cls("preset", 1, (1,), name="golden")
        if name == "sqrt2":
            return cls("preset", 1, (2,), name="sqrt2")
        if name == "e":
            return cls("preset", 2, (), name="e")
        raise InvalidSourceError(f"unknown preset {name!r}")

    @classmethod
    def power(cls, gamma, a0=0):
        g = Fraction(str(gamma)) if isinstance(gamma, float) else Fraction(gamma)
        if g < 1:
            raise InvalidSourceError("power rule needs gamma >= 1")
        return cls("power", int(a0), (), gamma=g)

    def _check(self, values):
        for a in values:
            if a <= 0:
                raise InvalidSourceError(f"non-positive partial quotient {a}")

    def quotient(self, n, q_n):
        """Partial quotient a_n (n >= 1); ``q_n`` is needed by the power rule."""
        if self.kind in ("periodic",) or (self.kind == "preset" and self.name != "e"):
            return self.values[(n - 1) % len(self.values)]
        if self.kind == "preset":
            return _e_quotient(n)
        if self.kind == "explicit":
            if n > len(self.values):
                raise DepthExhaustedError(
                    f"explicit source has only {len(self.values)} partial quotients")
            return self.values[n - 1]
        if self.kind == "power":
            return max(1, _ceil_power(q_n, self.gamma - 1))
        raise InvalidSourceError(f"unknown source kind {self.kind!r}")

    def max_depth(self):
        return len(self.values) if self.kind == "explicit" else None

    def to_spec(self):
        """Canonical text in the alpha grammar."""
        if self.kind == "preset":
            return self.name
        if self.kind == "explicit":
            return f"cf:[{self.a0};{','.join(map(str, self.values))}]"
        if self.kind == "periodic":
            return f"period:[{self.a0};({','.join(map(str, self.values))})]"
        g = self.gamma
        gs = str(g.numerator) if g.denominator == 1 else _fraction_text(g)
        return f"power:{gs}" if self.a0 == 0 else f"power:{gs}@{self.a0}"


def _fraction_text(g):
    # exact decimal when possible, otherwise p/q
    den = g.denominator
    d2 = den
    for f in (2, 5):
        while d2 % f == 0:
            d2 //= f
    if d2 != 1:
        return f"{g.numerator}/{g.denominator}"
    digits = 0
    while (g * 10 ** digits).denominator != 1:
        digits += 1
    return f"{float(g):.{digits}f}"


_CF_RE = re.compile(r"^cf:\[\s*(-?\d+)\s*;\s*([\d,\s]*)\]$")
_PERIOD_RE = re.compile(r"^period:\[\s*(-?\d+)\s*;\s*\(([\d,\s]+)\)\s*\]$")
_POWER_RE = re.compile(r"^power:([0-9./]+)(?:@(-?\d+))?$")


def parse_alpha(text):
    """Parse the alpha grammar.

    ``golden | sqrt2 | e | cf:[a0;a1,a2,...] | period:[a0;(a1,...,ak)] | power:<gamma>``
    """
    t = text.strip()
    if t in ("golden", "sqrt2", "e"):
        return PartialQuotientSource.preset(t)
    m = _CF_RE.match(t)
    if m:
        body = [s for s in m.group(2).replace(" ", "").split(",") if s]
        if not body:
            raise InvalidSourceError("cf: needs at least one partial quotient after a0")
        return PartialQuotientSource.explicit(int(m.group(1)), [int(s) for s in body])
    m = _PERIOD_RE.match(t)
    if m:
        body = [int(s) for s in m.group(2).replace(" ", "").split(",") if s]
        return PartialQuotientSource.periodic(int(m.group(1)), body)
    m = _POWER_RE.match(t)
    if m:
        g = m.group(1)
        gamma = Fraction(g) if "/" in g else Fraction(g)
        return PartialQuotientSource.power(gamma, int(m.group(2) or 0))
    raise InvalidSourceError(f"cannot parse alpha spec {text!r}")


# ---------------------------------------------------------------------------
# convergents


@dataclass(frozen=True)
class Convergent:
    """p_n / q_n with a certified enclosure of eps_n = q_n alpha - p_n."""

    n: int
    p: int
    q: int
    eps_lo: Fraction
    eps_hi: Fraction

    @property
    def sign(self):
        if self.eps_lo > 0:
            return 1
        if self.eps_hi < 0:
            return -1
        return 0

    @property
    def abs_lo(self):
        return min(abs(self.eps_lo), abs(self.eps_hi)) if self.sign else Fraction(0)

    @property
    def abs_hi(self):
        return max(abs(self.eps_lo), abs(self.eps_hi))

    @property
    def radius(self):
        return (self.eps_hi - self.eps_lo) / 2


class AlphaHandle:
    """Lazily deepened continued fraction of an irrational alpha.

    Convergent lists grow under a lock, so one handle can be shared between
    threads.  Materialized values never change.
    """

    def __init__(self, source):
        if not isinstance(source, PartialQuotientSource):
            raise TypeError("expected a PartialQuotientSource")
        if source.kind == "explicit" and len(source.values) < 1:
            raise InvalidSourceError("source needs a partial quotient beyond a0")
        self.source = source
        self._a = [source.a0]
        self._p = [1, source.a0]
        self._q = [0, 1]
        self._lock = threading.Lock()
        self._conv_cache = {}

    def __repr__(self):
        return f"AlphaHandle({self.source.to_spec()})"

    def __getstate__(self):
        # locks do not pickle; worker processes get a fresh one
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def spec(self):
        return self.source.to_spec()

    @property
    def depth(self):
        """Largest n with q_n materialized."""
        return len(self._q) - 1

    def _extend_to(self, n):
        # materialize q_n and p_n
        if n < len(self._q):
            return
        with self._lock:
            while len(self._q) <= n:
                m = len(self._q) - 1  # need a_m to build q_{m+1}
                a = self.source.quotient(m, self._q[m])
                if a <= 0 or int(a) != a:
                    raise InvalidSourceError(f"partial quotient a_{m} = {a} is not a positive integer")
                self._a.append(int(a))
                self._q.append(a * self._q[m] + self._q[m - 1])
                self._p.append(a * self._p[m] + self._p[m - 1])

    def partial_quotients(self, count):
        """[a0, a1, ..., a_{count}]."""
        self._extend_to(count + 1)
        return list(self._a[: count + 1])

    def pq(self, n):
        """Exact (p_n, q_n) for n >= 1."""
        if n < 1:
            raise ValueError("convergent index starts at 1")
        self._extend_to(n)
        return self._p[n], self._q[n]

    def q(self, n):
        return self.pq(n)[1]

    def convergent(self, n):
        """Convergent n with a certified enclosure of eps_n.

        alpha lies between p_N/q_N and p_{N+1}/q_{N+1} for every N; N is the
        smallest index >= n + 2 with q_N q_{N+1} >= 2**40 q_{n+1} q_{n+2}.
        The enclosure radius q_n / (q_N q_{N+1}) is then at least 2**40 times
        smaller than the distance from |eps_n| to either of the bounds
        1/(q_{n+1} + q_n) and 1/q_{n+1}.
        """
        if n < 1:
            raise ValueError("convergent index starts at 1")
        if n in self._conv_cache:
            return self._conv_cache[n]
        self._extend_to(n + 3)
        target = (1 << 40) * self._q[n + 1] * self._q[n + 2]
        N = n + 2
        while True:
            self._extend_to(N + 1)
            if self._q[N] * self._q[N + 1] >= target:
                break
            N += 1
        p, q = self._p[n], self._q[n]
        # q_n * (p_M / q_M) - p_n for M = N, N + 1, rounded outward to a dyadic
        # grid far finer than the enclosure itself; reducing the exact huge
        # fractions would dominate the cost for fast-growing denominators
        K = self._q[n + 1].bit_length() + self._q[n + 2].bit_length() + 64
        ends = []
        for M in (N, N + 1):
            qm = mpz(self._q[M])
            num = (mpz(q) * mpz(self._p[M]) - mpz(p) * qm) << K
            ends.append((int(gmpy2.f_div(num, qm)), int(gmpy2.c_div(num, qm))))
        lo = min(ends[0][0], ends[1][0])
        hi = max(ends[0][1], ends[1][1])
        c = Convergent(n, p, q, Fraction(lo, 1 << K), Fraction(hi, 1 << K))
        self._conv_cache[n] = c
        return c

    def bracket(self, n):
        """Rational interval (lo, hi) containing alpha, from convergents n, n+1."""
        p1, q1 = self.pq(n)
        p2, q2 = self.pq(n + 1)
        a, b = Fraction(p1, q1), Fraction(p2, q2)
        return (a, b) if a < b else (b, a)

    def index_for(self, predicate, start=1, limit=100000):
        """Smallest n >= start with predicate(q_n) true."""
        n = start
        while n < limit:
            if predicate(self.q(n)):
                return n
            n += 1
        raise DepthExhaustedError("no convergent satisfies the requested bound")


def make_alpha(source):
    """Build a handle from a source object or a grammar string."""
    if isinstance(source, str):
        source = parse_alpha(source)
    handle = AlphaHandle(source)
    handle._extend_to(2)
    return handle


# ---------------------------------------------------------------------------
# distance to the nearest integer


def _circle_distance(num, den):
    r = num % den
    return Fraction(min(r, den - r), den)


def dist_nearest_int_exact(alpha, h, eta):
    """Rational approximation of ||h alpha|| and a rational error bound.

    Picks the first convergent with h / q_n**2 <= eta and returns
    (||h p_n / q_n||, h / q_n**2).  The bound uses |q_n alpha - p_n| <= 1/q_{n+1}.
    """
    h = _check_harmonic(h)
    eta = Fraction(eta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    n = 1
    while True:
        p, q = alpha.pq(n)
        if Fraction(h, q * q) <= eta:
            break
        n += 1
    return _circle_distance(h * p, q), Fraction(h, q * q)


def dist_nearest_int(alpha, h, eta=1e-12):
    """(||h alpha|| as a float, certified absolute error bound)."""
    value, cert = dist_nearest_int_exact(alpha, h, Fraction(eta))
    v = float(value)
    # float rounding of the rational value is below one ulp
    return v, float(cert) + math.ulp(v)


def _check_harmonic(h):
    if int(h) != h or h < 1:
        raise ValueError("h must be a positive integer")
    return int(h)


def fractional_part(alpha, m, eta=1e-15):
    """{m alpha} as a float for any integer m (0 allowed), error <= eta + 1 ulp."""
    m = int(m)
    if m == 0:
        return 0.0
    a = abs(m)
    n = alpha.index_for(lambda q: Fraction(a, q * q) <= Fraction(eta))
    p, q = alpha.pq(n)
    return float(Fraction((m * p) % q, q))


def certified_abs_qn_alpha(alpha, n):
    """||q_n alpha|| = |eps_n| as a (lo, hi) rational enclosure (n >= 2)."""
    c = alpha.convergent(n)
    return c.abs_lo, c.abs_hi


# ---------------------------------------------------------------------------
# Diophantine profile


@dataclass
class DiophantineProfile:
    depth: int
    records: list = field(default_factory=list)  # (n, q_n, ||q_n alpha|| float)
    gamma_hat: float = 1.0
    witness: list = field(default_factory=list)  # q_n**gamma_hat * ||q_n alpha||

    def as_rows(self):
        return [(n, q, d, w) for (n, q, d), w in zip(self.records, self.witness)]


def _log_fraction(x):
    return math.log(x.numerator) - math.log(x.denominator)


def estimate_strong_type(alpha, depth):
    """Estimate the strong type of alpha from convergents 2..depth.

    The exponent is the least-squares slope of log(1/||q_n alpha||) against
    log q_n over the deeper half of the convergents with q_n >= 2 (at least
    three points), floored at 1.  Fitting a slope cancels the constant in
    ||q_n alpha|| ~ C q_n^-gamma, which otherwise dominates for small q_n.
    """
    if depth < 3:
        raise ValueError("depth must be at least 3")
    records = []
    xs, ys = [], []
    for n in range(2, depth + 1):
        c = alpha.convergent(n)
        mid = (c.abs_lo + c.abs_hi) / 2
        records.append((n, c.q, float(mid)))
        if c.q >= 2:
            xs.append(math.log(c.q))
            ys.append(-_log_fraction(mid))
    if len(xs) < 2:
        raise DepthExhaustedError("not enough convergents with q_n >= 2")
    k = max(3, len(xs) // 2)
    x = np.array(xs[-k:])
    y = np.array(ys[-k:])
    slope = float(np.polyfit(x, y, 1)[0]) if len(x) >= 2 else float(y[-1] / x[-1])
    gamma_hat = max(1.0, slope)
    witness = []
    for n, q, d in records:
        # log-space to survive q_n**gamma for huge q_n
        lw = gamma_hat * math.log(q) + math.log(d) if d > 0 else -math.inf
        witness.append(math.exp(lw) if lw < 700 else math.inf)
    return DiophantineProfile(depth, records, gamma_hat, witness)
