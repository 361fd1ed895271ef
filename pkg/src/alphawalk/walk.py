"""Seeded random walks and certified fractional parts {S_k h alpha}.

For a convergent p/q of alpha and an integer S,

    |S h alpha - S h p / q| = |S| h |q alpha - p| / q <= |S| h / (q q')

where q' is the next denominator.  :func:`simulate` picks the first
convergent with q^2 >= 2 * max|S_k| * max(h) / eta, so that bound is at most
eta / 2, and then only ever touches the residues S_k h p mod q.
"""

import concurrent.futures as cf
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .alpha import AlphaHandle, make_alpha
from .steps import as_dist, sample

MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One round of the splitmix64 mixer on a 64-bit integer."""
    z = (int(x) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replica_rng(seed, replica):
    """Counter-based Philox stream for one replica: key = seed xor splitmix64(replica)."""
    key = (int(seed) & MASK64) ^ splitmix64(replica)
    return np.random.Generator(np.random.Philox(key=key))


def dyadic_checkpoints(n_max, start=1):
    cps = []
    n = start
    while n < n_max:
        cps.append(n)
        n *= 2
    cps.append(n_max)
    return np.array(cps, dtype=np.int64)


@dataclass
class WalkConfig:
    dist: object
    alpha: object
    n_max: int
    harmonics: tuple = (1,)
    checkpoints: tuple = None
    seed: int = 0
    eta: float = 1e-12
    # harmonics the certificate must also cover without being stored
    # (Erdos-Turan sums reuse the h = 1 trace up to this harmonic)
    precision_hmax: int = None

    def __post_init__(self):
        self.dist = as_dist(self.dist)
        if not isinstance(self.alpha, AlphaHandle):
            self.alpha = make_alpha(self.alpha)
        self.n_max = int(self.n_max)
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        self.harmonics = tuple(int(h) for h in self.harmonics)
        if not self.harmonics or min(self.harmonics) < 1:
            raise ValueError("harmonics must be positive integers")
        if self.checkpoints is None:
            self.checkpoints = tuple(int(c) for c in dyadic_checkpoints(self.n_max))
        else:
            cps = sorted(set(int(c) for c in self.checkpoints))
            if cps[0] < 1 or cps[-1] > self.n_max:
                raise ValueError("checkpoints must lie in [1, n_max]")
            self.checkpoints = tuple(cps)

    @property
    def hmax(self):
        return max(max(self.harmonics), self.precision_hmax or 1)


def predicted_max_abs(dist, n):
    """Working envelope for max_{k <= n} |S_k|."""
    var = dist.variance
    if math.isfinite(var):
        return abs(dist.mean) * n + 12.0 * math.sqrt(var * n) + 1.0
    drift = abs(dist.mean) * n if dist.mean is not None else 0.0
    return drift + float(n) ** (2.0 / dist.beta) + 1.0


def choose_convergent(alpha, max_abs_s, hmax, eta):
    """Smallest n >= 2 with q_n^2 >= 2 * max|S| * hmax / eta."""
    need = 2.0 * max(1.0, float(max_abs_s)) * hmax / eta
    need_int = int(math.ceil(need))
    return alpha.index_for(lambda q: q * q >= need_int, start=2)


@dataclass
class FracPartTrace:
    """Fractional parts {S_k h alpha}, k = 1..n_max, for each traced harmonic."""

    config: WalkConfig
    replica: int
    n: int
    p: int
    q: int
    points: dict  # h -> float array of length n_max, in walk order
    checkpoints: np.ndarray
    s_at_checkpoints: list
    max_abs_s: int
    error_bound: float
    deepened: bool = False
    path: object = field(default=None, repr=False)
    # max|S_k| / (q q'), the real-line error of {S_k alpha} before rounding
    unit_error: float = 0.0

    @property
    def length(self):
        return self.config.n_max

    def sorted_points(self, h, N):
        if h not in self.points:
            raise KeyError(f"harmonic {h} was not traced")
        if not 0 <= N <= self.length:
            raise ValueError("N outside the trace")
        return np.sort(self.points[h][:N])

    def certificate(self):
        return {
            "convergent_index": self.n,
            "q_n": str(self.q),
            "eps_bound": self.error_bound,
            "eta": self.config.eta,
            "max_abs_S": str(self.max_abs_s),
            "deepened": self.deepened,
        }


def _exact_partial_sums(X):
    """Cumulative sums as int64 when overflow is impossible, else Python ints."""
    if X.dtype != object and X.size:
        m = int(np.max(np.abs(X)))
        if m * X.size < (1 << 63):
            return np.cumsum(X)
    return np.cumsum(X.astype(object))


def _unit_from_object(r, q):
    # floor(r * 2^64 / q) / 2^64, error below 2^-64 plus one rounding
    scaled = (r.astype(object) << 64) // q
    x = scaled.astype(np.float64) / 18446744073709551616.0
    return np.minimum(x, kernels._ONE_MINUS)


def _fracparts(X, S, p, q, harmonics, backend=None):
    limb_ok = (q < kernels.LIMB_CAPACITY and X.dtype != object and
               (X.size == 0 or int(np.max(np.abs(X))) < kernels.STEP_CAPACITY) and
               max(harmonics) < kernels.STEP_CAPACITY)
    out = {}
    if limb_ok:
        hi, lo = kernels.walk_residues(X, p, q, backend=backend)
        for h in harmonics:
            if h == 1:
                hh, ll = hi, lo
            else:
                hh, ll = kernels.scale_residues(hi, lo, h, q, backend=backend)
            out[h] = kernels.residues_to_unit(hh, ll, q, backend=backend)
        return out
    Sobj = S.astype(object)
    for h in harmonics:
        r = (Sobj * ((h * p) % q)) % q
        out[h] = _unit_from_object(r, q)
    return out


def simulate(config, replica=0, backend=None, keep_path=True):
    """Simulate one replica and return its certified :class:`FracPartTrace`."""
    rng = replica_rng(config.seed, replica)
    X = sample(config.dist, rng, config.n_max)
    S = _exact_partial_sums(X)
    alpha = config.alpha
    hmax = config.hmax
    pred = predicted_max_abs(config.dist, config.n_max)
    n = choose_convergent(alpha, pred, hmax, config.eta)
    max_abs = int(max(abs(int(S.max())), abs(int(S.min())))) if S.size else 0
    deepened = False
    if max_abs > pred:
        # envelope violated: move to a deeper convergent and recompute from S
        n2 = choose_convergent(alpha, max_abs, hmax, config.eta)
        deepened = n2 != n
        n = n2
    p, q = alpha.pq(n)
    q_next = alpha.q(n + 1)
    pts = _fracparts(X, S, p, q, config.harmonics, backend=backend)
    # real-line error |S| h / (q q') plus float conversion of r / q
    unit = max_abs / (q * q_next)
    err = unit * hmax + 4.5e-16
    cps = np.array(config.checkpoints, dtype=np.int64)
    s_cp = [int(S[c - 1]) for c in cps]
    return FracPartTrace(config, int(replica), n, p, q, pts, cps, s_cp, max_abs,
                         float(err), deepened, S if keep_path else None, float(unit))


# ---------------------------------------------------------------------------
# replica-parallel helpers


def map_replicas(fn, args_list, workers=1):
    """Apply ``fn`` to each argument tuple, in a process pool when workers > 1.

    Results come back in input order, so output never depends on scheduling.
    """
    args_list = list(args_list)
    if workers is None or workers <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with cf.ProcessPoolExecutor(max_workers=int(workers)) as ex:
        futures = [ex.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]


def _simulate_worker(config, replica, backend):
    return simulate(config, replica, backend=backend)


def simulate_replicas(config, replicas, workers=1, backend=None):
    """Traces for replicas 0..replicas-1 (or an explicit list), ordered by replica."""
    ids = list(range(replicas)) if isinstance(replicas, int) else list(replicas)
    return map_replicas(_simulate_worker, [(config, r, backend) for r in ids], workers)


# ---------------------------------------------------------------------------
# dumps


def write_trace_csv(traces, path, checkpoints=None):
    """CSV rows (replica, checkpoint_N, h, point_index, fracpart), sorted points per checkpoint."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#alpha-walk-lab v1\n")
        fh.write("replica,checkpoint_N,h,point_index,fracpart\n")
        for tr in traces:
            cps = tr.checkpoints if checkpoints is None else checkpoints
            for N in cps:
                for h in sorted(tr.points):
                    pts = tr.sorted_points(h, int(N))
                    for i, v in enumerate(pts):
                        fh.write(f"{tr.replica},{int(N)},{h},{i},{float(v)!r}\n")


def write_trace_sidecar(traces, path):
    data = {
        "dist": str(traces[0].config.dist) if traces else None,
        "alpha": traces[0].config.alpha.spec if traces else None,
        "replicas": [dict(replica=tr.replica, **tr.certificate()) for tr in traces],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
