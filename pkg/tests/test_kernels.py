import os
import runpy
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from alphawalk import kernels
from alphawalk._accel import HAVE_NUMBA

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

MODULI = [7, 1134903170, (1 << 61) - 1, (1 << 100) + 277, (1 << 124) - 159]


def reference_residues(X, p, q):
    S = np.cumsum(np.asarray(X, dtype=object), axis=-1)
    return (S * p) % q


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("q", MODULI)
def test_walk_residues_exact(backend, q):
    rng = np.random.default_rng(q % 1000)
    X = rng.integers(-(1 << 40), 1 << 40, size=(3, 200))
    p = (q * 5) // 8 + 1
    hi, lo = kernels.walk_residues(X, p, q, backend=backend)
    assert np.array_equal(kernels.join_limbs(hi, lo), reference_residues(X, p, q))


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("q", MODULI)
def test_scale_and_distance(backend, q):
    rng = np.random.default_rng(1)
    X = rng.integers(-1000, 1000, size=300)
    p = q // 3 + 1
    hi, lo = kernels.walk_residues(X, p, q, backend=backend)
    r = reference_residues(X, p, q)
    for h in (1, 2, 31, (1 << 61) + 5):
        a, b = kernels.scale_residues(hi, lo, h, q, backend=backend)
        assert np.array_equal(kernels.join_limbs(a, b), (r * h) % q)
    u = kernels.residues_to_unit(hi, lo, q, backend=backend)
    ref = np.array([float(v) / float(q) if q < 1 << 53 else int(v) / q for v in r])
    assert np.all((u >= 0) & (u < 1))
    assert np.max(np.abs(u - ref)) < 4e-16
    d = kernels.residue_distance(hi, lo, q, backend=backend)
    dref = np.array([min(int(v), q - int(v)) / q for v in r])
    assert np.max(np.abs(d - dref)) < 4e-16


def test_backends_agree():
    if not HAVE_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(3)
    x = rng.random(5000)
    cps = [1, 2, 4, 100, 1000, 5000]
    for fn in (lambda b: kernels.prefix_discrepancies(x, cps, backend=b),
               lambda b: kernels.sorted_discrepancies(np.sort(x), backend=b)):
        a, b = fn("numpy"), fn("numba")
        assert np.allclose(a, b, rtol=0, atol=1e-15)
    T1 = kernels.harmonic_prefix_sums(x, 40, cps, backend="numpy")
    T2 = kernels.harmonic_prefix_sums(x, 40, cps, backend="numba")
    assert np.max(np.abs(T1 - T2)) < 1e-9


def test_harmonic_sums_match_direct_exponentials():
    rng = np.random.default_rng(4)
    x = rng.random(2000)
    cps = [10, 500, 2000]
    T = kernels.harmonic_prefix_sums(x, 25, cps)
    for h in (1, 7, 25):
        e = np.exp(2j * np.pi * h * x)
        for j, N in enumerate(cps):
            assert abs(T[h - 1, j] - e[:N].sum()) < 4 * h * N * 2.3e-16 + 1e-12


def test_limb_capacity_guard():
    with pytest.raises(ValueError):
        kernels.walk_residues(np.ones(3, dtype=np.int64), 1, kernels.LIMB_CAPACITY)
    with pytest.raises(ValueError):
        kernels.split_limbs(-1)


def test_env_flag_forces_numpy():
    env = dict(os.environ, ALPHAWALK_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from alphawalk import _accel; print(_accel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_benchmark_script_runs(capsys):
    bench = runpy.run_path(str(Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"))
    bench["main"](["--n", "4096", "--harmonics", "4", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "walk_residues" in out or "not installed" in out
