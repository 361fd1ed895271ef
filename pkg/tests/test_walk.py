import json
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from alphawalk.alpha import make_alpha
from alphawalk.walk import (WalkConfig, dyadic_checkpoints, replica_rng, simulate,
                            simulate_replicas, splitmix64, write_trace_csv, write_trace_sidecar)
from oracles import golden_frac


def test_splitmix_reference_values():
    # first outputs of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_replica_streams_are_distinct_and_repeatable():
    a = replica_rng(42, 0).random(5)
    assert np.array_equal(a, replica_rng(42, 0).random(5))
    assert not np.array_equal(a, replica_rng(42, 1).random(5))
    assert not np.array_equal(a, replica_rng(43, 0).random(5))


def test_dyadic_checkpoints():
    assert list(dyadic_checkpoints(16)) == [1, 2, 4, 8, 16]
    assert list(dyadic_checkpoints(20)) == [1, 2, 4, 8, 16, 20]


@pytest.mark.parametrize("alpha", ["golden", "power:4", "e"])
def test_fracparts_against_high_precision(alpha):
    cfg = WalkConfig("twopoint:1,2,0.5", alpha, 3000, harmonics=(1, 3), seed=9)
    tr = simulate(cfg)
    handle = make_alpha(alpha)
    lo, hi = handle.bracket(handle.index_for(lambda q: q > 10 ** 40))
    with mpmath.workdps(60):
        a = mpmath.mpf(lo.numerator) / lo.denominator
        for k in (0, 1, 17, 999, 2999):
            for h in (1, 3):
                ref = float(mpmath.frac(tr.path[k] * h * a))
                got = tr.points[h][k]
                diff = min(abs(got - ref), 1 - abs(got - ref))
                assert diff <= tr.error_bound + 1e-15


def test_error_bound_meets_eta():
    tr = simulate(WalkConfig("twopoint:1,2,0.5", "golden", 1 << 14, eta=1e-12))
    assert tr.error_bound <= 1e-12 / 2 + 1e-15
    assert tr.max_abs_s == max(abs(int(v)) for v in tr.path)
    assert Fraction(tr.max_abs_s, tr.q * make_alpha("golden").q(tr.n + 1)) <= Fraction(1, 2) * Fraction(1e-12)


def test_heavy_tail_uses_exact_integers():
    tr = simulate(WalkConfig("symzeta:0.5", "power:8", 1 << 12, seed=3))
    assert tr.path.dtype == object or tr.max_abs_s < (1 << 62)
    assert np.all((tr.points[1] >= 0) & (tr.points[1] < 1))
    assert tr.error_bound < 1e-12


def test_same_seed_same_trace_any_workers():
    cfg = WalkConfig("twopoint:1,2,0.5", "golden", 2048, seed=5)
    a = simulate_replicas(cfg, 3, workers=1)
    b = simulate_replicas(cfg, 3, workers=2)
    for x, y in zip(a, b):
        assert x.points[1].tobytes() == y.points[1].tobytes()
    assert a[0].points[1].tobytes() != a[1].points[1].tobytes()


def test_numpy_and_numba_traces_agree():
    cfg = WalkConfig("pmf:[(1,0.9),(5,0.1)]", "sqrt2", 4096, harmonics=(1, 2), seed=1)
    a = simulate(cfg, backend="numpy")
    b = simulate(cfg, backend="numba")
    for h in (1, 2):
        assert np.max(np.abs(a.points[h] - b.points[h])) < 1e-15


def test_trace_dump(tmp_path):
    cfg = WalkConfig("twopoint:1,2,0.5", "golden", 8, harmonics=(1, 2))
    traces = simulate_replicas(cfg, 2)
    path = tmp_path / "t.csv"
    write_trace_csv(traces, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "#alpha-walk-lab v1"
    assert lines[1] == "replica,checkpoint_N,h,point_index,fracpart"
    # sum over checkpoints 1, 2, 4, 8 of N points, two harmonics, two replicas
    assert len(lines) - 2 == 2 * 2 * (1 + 2 + 4 + 8)
    side = tmp_path / "t.json"
    write_trace_sidecar(traces, side)
    data = json.loads(side.read_text())
    assert len(data["replicas"]) == 2 and data["alpha"] == "golden"


def test_bad_configs():
    with pytest.raises(ValueError):
        WalkConfig("twopoint:1,2,0.5", "golden", 0)
    with pytest.raises(ValueError):
        WalkConfig("twopoint:1,2,0.5", "golden", 10, harmonics=(0,))
    with pytest.raises(ValueError):
        WalkConfig("twopoint:1,2,0.5", "golden", 10, checkpoints=(20,))


def test_degenerate_walk_is_weyl_sequence():
    tr = simulate(WalkConfig("pmf:[(1,1.0)]", "golden", 100))
    for k in range(1, 101):
        assert abs(tr.points[1][k - 1] - golden_frac(k)) < 1e-12
