"""Time the hot kernels on the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--n 1048576] [--harmonics 32] [--repeat 3]

Each kernel is run once per backend before timing so numba compilation is
excluded.  Results are checked for agreement before they are reported.
"""

import argparse
import time

import numpy as np

from alphawalk import kernels
from alphawalk._accel import HAVE_NUMBA
from alphawalk.alpha import make_alpha


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(n, H):
    rng = np.random.default_rng(0)
    X = rng.integers(1, 3, size=n)
    alpha = make_alpha("golden")
    p, q = alpha.pq(alpha.index_for(lambda q: q > 1 << 100))
    hi, lo = kernels.walk_residues(X, p, q)
    x = kernels.residues_to_unit(hi, lo, q)
    cps = kernels_checkpoints(n)
    return [
        ("walk_residues", lambda b: kernels.walk_residues(X, p, q, backend=b)),
        ("scale_residues", lambda b: kernels.scale_residues(hi, lo, 12345, q, backend=b)),
        ("residues_to_unit", lambda b: kernels.residues_to_unit(hi, lo, q, backend=b)),
        ("residue_distance", lambda b: kernels.residue_distance(hi, lo, q, backend=b)),
        ("prefix_discrepancies", lambda b: kernels.prefix_discrepancies(x, cps, backend=b)),
        (f"harmonic_prefix_sums[H={H}]", lambda b: kernels.harmonic_prefix_sums(x, H, cps, backend=b)),
    ]


def kernels_checkpoints(n):
    cps = [1]
    while cps[-1] * 2 < n:
        cps.append(cps[-1] * 2)
    return np.array(cps + [n])


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(u, v) for u, v in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind in "iu":
        return np.array_equal(a, b)
    return np.allclose(a, b, rtol=0, atol=1e-9)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1 << 20)
    ap.add_argument("--harmonics", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend can run")
        return
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':32s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, fn in cases(args.n, args.harmonics):
        fn("numba")  # compile
        t_np, a = best_of(lambda: fn("numpy"), args.repeat)
        t_nb, b = best_of(lambda: fn("numba"), args.repeat)
        if not _close(a, b):
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:32s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
