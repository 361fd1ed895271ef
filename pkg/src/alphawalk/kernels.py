"""Hot numeric kernels, each with a numba path and a pure-numpy twin.

Residues modulo a convergent denominator ``q < 2**124`` are carried as two
int64 limbs in base ``2**62`` (``value = hi * 2**62 + lo``).  The numba
kernels do exact modular arithmetic on those limbs; the numpy twins do the
same arithmetic on object arrays of Python ints.  Both return bit-identical
results, which ``tests/test_kernels.py`` checks and ``benchmarks/`` times.

The module-level names (``walk_residues``, ``scale_residues`` ...) dispatch
to the backend selected in :mod:`alphawalk._accel`.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

LIMB_BITS = 62
LIMB_BASE = 1 << LIMB_BITS
LIMB_MASK = LIMB_BASE - 1
# largest modulus the two-limb kernels accept (exclusive)
LIMB_CAPACITY = 1 << (2 * LIMB_BITS)
# largest |step| the numba residue kernel accepts (exclusive)
STEP_CAPACITY = 1 << LIMB_BITS

_TWO62 = float(LIMB_BASE)


def split_limbs(n):
    n = int(n)
    if not 0 <= n < LIMB_CAPACITY:
        raise ValueError("value does not fit in two 62-bit limbs")
    return n >> LIMB_BITS, n & LIMB_MASK


def join_limbs(hi, lo):
    """Recombine limb arrays into an object array of Python ints."""
    hi = np.asarray(hi).astype(object)
    lo = np.asarray(lo).astype(object)
    return hi * LIMB_BASE + lo


def _split_object(r):
    r = np.asarray(r, dtype=object)
    hi = (r >> LIMB_BITS).astype(np.int64)
    lo = (r & LIMB_MASK).astype(np.int64)
    return hi, lo


# ---------------------------------------------------------------------------
# limb arithmetic (numba helpers)


@njit
def _modadd(ah, al, bh, bl, qh, ql):
    lo = al + bl
    carry = lo >> 62
    lo = lo & 4611686018427387903
    hi = ah + bh + carry
    if hi > qh or (hi == qh and lo >= ql):
        lo = lo - ql
        borrow = 0
        if lo < 0:
            lo += 4611686018427387904
            borrow = 1
        hi = hi - qh - borrow
    return hi, lo


@njit
def _mulsmall(n, ah, al, qh, ql):
    # n * a mod q for 0 <= n < 2**62, by double-and-add
    rh = 0
    rl = 0
    nbits = 0
    t = n
    while t > 0:
        nbits += 1
        t >>= 1
    for b in range(nbits - 1, -1, -1):
        rh, rl = _modadd(rh, rl, rh, rl, qh, ql)
        if (n >> b) & 1:
            rh, rl = _modadd(rh, rl, ah, al, qh, ql)
    return rh, rl


@njit
def _negmod(ah, al, qh, ql):
    # (q - a) mod q
    if ah == 0 and al == 0:
        return 0, 0
    lo = ql - al
    borrow = 0
    if lo < 0:
        lo += 4611686018427387904
        borrow = 1
    return qh - ah - borrow, lo


# ---------------------------------------------------------------------------
# walk residues: r_k = (X_1 + ... + X_k) * p mod q


@njit
def _walk_residues_numba(X, ph, pl, qh, ql):
    R, L = X.shape
    out_hi = np.empty((R, L), dtype=np.int64)
    out_lo = np.empty((R, L), dtype=np.int64)
    for i in range(R):
        rh = 0
        rl = 0
        for k in range(L):
            x = X[i, k]
            if x >= 0:
                ch, cl = _mulsmall(x, ph, pl, qh, ql)
            else:
                ch, cl = _mulsmall(-x, ph, pl, qh, ql)
                ch, cl = _negmod(ch, cl, qh, ql)
            rh, rl = _modadd(rh, rl, ch, cl, qh, ql)
            out_hi[i, k] = rh
            out_lo[i, k] = rl
    return out_hi, out_lo


def _walk_residues_numpy(X, p, q):
    S = np.cumsum(np.asarray(X).astype(object), axis=-1)
    return _split_object((S * p) % q)


def walk_residues(X, p, q, backend=None):
    """Residues of the partial sums of ``X`` (along the last axis) times ``p``.

    ``X`` is an int64 array of shape ``(L,)`` or ``(R, L)``.  Returns the
    limb pair ``(hi, lo)`` with the shape of ``X``.
    """
    X = np.asarray(X, dtype=np.int64)
    p = int(p) % int(q)
    q = int(q)
    if q >= LIMB_CAPACITY:
        raise ValueError("modulus too large for the limb kernels")
    if _use_numba(backend):
        if X.size and int(np.max(np.abs(X))) >= STEP_CAPACITY:
            raise ValueError("step too large for the limb kernels")
        X2 = X.reshape(1, -1) if X.ndim == 1 else X
        ph, pl = split_limbs(p)
        qh, ql = split_limbs(q)
        hi, lo = _walk_residues_numba(np.ascontiguousarray(X2), ph, pl, qh, ql)
        return hi.reshape(X.shape), lo.reshape(X.shape)
    return _walk_residues_numpy(X, p, q)


# ---------------------------------------------------------------------------
# scaling by a harmonic: h * r mod q


@njit
def _scale_residues_numba(hi, lo, h, qh, ql):
    n = hi.size
    fh = hi.ravel()
    fl = lo.ravel()
    out_hi = np.empty(n, dtype=np.int64)
    out_lo = np.empty(n, dtype=np.int64)
    for k in range(n):
        a, b = _mulsmall(h, fh[k], fl[k], qh, ql)
        out_hi[k] = a
        out_lo[k] = b
    return out_hi, out_lo


def scale_residues(hi, lo, h, q, backend=None):
    h = int(h)
    if h < 0 or h >= STEP_CAPACITY:
        raise ValueError("harmonic out of range")
    hi = np.asarray(hi, dtype=np.int64)
    lo = np.asarray(lo, dtype=np.int64)
    if _use_numba(backend):
        qh, ql = split_limbs(q)
        a, b = _scale_residues_numba(np.ascontiguousarray(hi),
                                     np.ascontiguousarray(lo), h, qh, ql)
        return a.reshape(hi.shape), b.reshape(hi.shape)
    r = join_limbs(hi, lo)
    return _split_object((r * h) % int(q))


# ---------------------------------------------------------------------------
# residue -> float


_ONE_MINUS = np.nextafter(1.0, 0.0)


@njit
def _to_unit_numba(hi, lo, qf):
    n = hi.size
    fh = hi.ravel()
    fl = lo.ravel()
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        x = (fh[k] * 4611686018427387904.0 + fl[k]) / qf
        if x >= 1.0:
            x = 0.9999999999999999
        out[k] = x
    return out


def _to_unit_numpy(hi, lo, qf):
    x = (hi.astype(np.float64) * _TWO62 + lo.astype(np.float64)) / qf
    return np.minimum(x, _ONE_MINUS)


def residues_to_unit(hi, lo, q, backend=None):
    """Float value of ``r / q`` in ``[0, 1)``; absolute error below 4e-16."""
    hi = np.asarray(hi, dtype=np.int64)
    lo = np.asarray(lo, dtype=np.int64)
    qf = float(int(q))
    if _use_numba(backend):
        return _to_unit_numba(np.ascontiguousarray(hi),
                              np.ascontiguousarray(lo), qf).reshape(hi.shape)
    return _to_unit_numpy(hi, lo, qf)


@njit
def _residue_distance_numba(hi, lo, qh, ql, qf):
    n = hi.size
    fh = hi.ravel()
    fl = lo.ravel()
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        nh, nl = _negmod(fh[k], fl[k], qh, ql)
        if nh < fh[k] or (nh == fh[k] and nl < fl[k]):
            out[k] = (nh * 4611686018427387904.0 + nl) / qf
        else:
            out[k] = (fh[k] * 4611686018427387904.0 + fl[k]) / qf
    return out


def residue_distance(hi, lo, q, backend=None):
    """Float value of ``min(r, q - r) / q``, the circle distance of r/q to 0."""
    hi = np.asarray(hi, dtype=np.int64)
    lo = np.asarray(lo, dtype=np.int64)
    q = int(q)
    if _use_numba(backend):
        qh, ql = split_limbs(q)
        return _residue_distance_numba(np.ascontiguousarray(hi),
                                       np.ascontiguousarray(lo), qh, ql,
                                       float(q)).reshape(hi.shape)
    r = join_limbs(hi, lo)
    d = np.minimum(r, q - r) % q
    dh, dl = _split_object(d)
    return (dh.astype(np.float64) * _TWO62 + dl.astype(np.float64)) / float(q)


# ---------------------------------------------------------------------------
# discrepancy of sorted points


@njit
def _sorted_disc_numba(x):
    n = x.size
    up = -1.0
    down = -1.0
    for i in range(n):
        a = (i + 1) / n - x[i]
        b = x[i] - i / n
        if a > up:
            up = a
        if b > down:
            down = b
    return up + down, max(up, down)


def _sorted_disc_numpy(x):
    n = x.size
    i = np.arange(1, n + 1, dtype=np.float64)
    up = np.max(i / n - x)
    down = np.max(x - (i - 1) / n)
    return up + down, max(up, down)


def sorted_discrepancies(x, backend=None):
    """(extreme, star) discrepancy of an ascending float array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty point set")
    if _use_numba(backend):
        d, ds = _sorted_disc_numba(x)
    else:
        d, ds = _sorted_disc_numpy(x)
    return float(d), float(ds)


@njit
def _merge_sorted(a, b):
    out = np.empty(a.size + b.size, dtype=np.float64)
    i = 0
    j = 0
    for k in range(out.size):
        if j >= b.size or (i < a.size and a[i] <= b[j]):
            out[k] = a[i]
            i += 1
        else:
            out[k] = b[j]
            j += 1
    return out


def _prefix_disc_merge(x, cp):
    # numpy sorts each new chunk, numba merges it into the sorted prefix
    D = np.empty(cp.size)
    Ds = np.empty(cp.size)
    buf = np.empty(0)
    prev = 0
    for j, N in enumerate(cp):
        N = int(N)
        if N < prev:
            buf = np.sort(x[:N])
        elif N > prev:
            buf = _merge_sorted(buf, np.sort(x[prev:N]))
        prev = N
        D[j], Ds[j] = _sorted_disc_numba(buf)
    return D, Ds


def prefix_discrepancies(x, checkpoints, backend=None):
    """Extreme and star discrepancy of each prefix ``x[:N]``, N in checkpoints."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    cp = np.asarray(checkpoints, dtype=np.int64)
    if cp.size and (cp.min() < 1 or cp.max() > x.size):
        raise ValueError("checkpoint outside the point range")
    if _use_numba(backend):
        return _prefix_disc_merge(x, cp)
    D = np.empty(cp.size)
    Ds = np.empty(cp.size)
    for j, N in enumerate(cp):
        D[j], Ds[j] = _sorted_disc_numpy(np.sort(x[:N]))
    return D, Ds


# ---------------------------------------------------------------------------
# exponential sums over harmonics


@njit
def _harmonic_sums_numba(x, H, checkpoints):
    m = checkpoints.size
    out = np.empty((H, m), dtype=np.complex128)
    acc = np.zeros(H, dtype=np.complex128)
    k = 0
    for j in range(m):
        while k < checkpoints[j]:
            w = np.exp(2j * np.pi * x[k])
            z = w
            for h in range(H):
                acc[h] += z
                z = z * w
            k += 1
        out[:, j] = acc
    return out


def _harmonic_sums_numpy(x, H, checkpoints):
    m = checkpoints.size
    N = int(checkpoints[-1])
    w = np.exp(2j * np.pi * x[:N])
    z = w.copy()
    out = np.empty((H, m), dtype=np.complex128)
    for h in range(H):
        c = np.cumsum(z)
        out[h] = c[checkpoints - 1]
        z *= w
    return out


def harmonic_prefix_sums(x, H, checkpoints, backend=None):
    """``T[h-1, j] = sum_{k < N_j} exp(2 pi i h x_k)`` for h = 1..H.

    Harmonics are generated by repeated multiplication of unit complex
    numbers; the accumulated rounding is below ``4 h`` ulps per term.
    Checkpoints must be increasing.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    cp = np.asarray(checkpoints, dtype=np.int64)
    if cp.size == 0 or H < 1:
        return np.zeros((max(H, 0), cp.size), dtype=np.complex128)
    if np.any(np.diff(cp) <= 0) or cp[0] < 1 or cp[-1] > x.size:
        raise ValueError("checkpoints must be increasing and within range")
    if _use_numba(backend):
        return _harmonic_sums_numba(x, int(H), cp)
    return _harmonic_sums_numpy(x, int(H), cp)


def _use_numba(backend):
    if backend is None:
        return USE_NUMBA
    if backend == "numba":
        from ._accel import HAVE_NUMBA
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is missing")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")
