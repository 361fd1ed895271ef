import math

import numpy as np
import pytest

from alphawalk.alpha import make_alpha
from alphawalk.discrepancy import extreme_discrepancy
from alphawalk.moments import (GuardrailError, bound_mom_i, bound_mom_ii, closed_form_second_moment,
                               erdos_turan_bound, exp_sum, f_mns_bound, f_mns_eval,
                               max_disjoint_intervals, mc_moment, moment_second_closed,
                               moment_via_partitions, moment_via_paths, near_one_intervals,
                               ordered_partitions)
from alphawalk.walk import WalkConfig, simulate

GOLDEN = make_alpha("golden")


def test_ordered_partition_counts():
    # ordered Bell (Fubini) numbers
    assert [len(ordered_partitions(k)) for k in range(1, 7)] == [1, 3, 13, 75, 541, 4683]


def test_closed_form_second_moment_direct():
    for z in (0.3 + 0.4j, -0.9, np.exp(0.01j) * 0.999, 1.0):
        for n in (1, 2, 5, 40):
            direct = sum(z ** (abs(k - l)) if k >= l else np.conj(z) ** (l - k)
                         for k in range(n) for l in range(n))
            assert closed_form_second_moment(z, n) == pytest.approx(direct.real, rel=1e-12)


@pytest.mark.parametrize("dist", ["twopoint:1,2,0.5", "twopoint:-1,1,0.5"])
@pytest.mark.parametrize("p", [1, 2])
def test_partitions_equal_paths(dist, p):
    for n in (1, 3, 5):
        for h in (1, 3):
            a = moment_via_partitions(dist, GOLDEN, h, 0, n, p).value
            b = moment_via_paths(dist, GOLDEN, h, 0, n, p).value
            assert a == pytest.approx(b, rel=1e-10)
            if p == 1:
                assert moment_second_closed(dist, GOLDEN, h, n).value == pytest.approx(a, rel=1e-10)


def test_partitions_with_offset_m():
    a = moment_via_partitions("twopoint:1,2,0.5", GOLDEN, 2, 3, 4, 2).value
    b = moment_via_paths("twopoint:1,2,0.5", GOLDEN, 2, 3, 4, 2).value
    assert a == pytest.approx(b, rel=1e-10)


def test_guardrails():
    with pytest.raises(GuardrailError):
        moment_via_partitions("twopoint:1,2,0.5", GOLDEN, 1, 0, 13, 1)
    with pytest.raises(GuardrailError):
        moment_via_paths("symzeta:0.5", GOLDEN, 1, 0, 3, 1)
    with pytest.raises(GuardrailError):
        f_mns_eval([0.5] * 9, 0, 20)


def test_monte_carlo_agrees_with_exact():
    exact = moment_second_closed("twopoint:1,2,0.5", GOLDEN, 1, 32).value
    rec = mc_moment("twopoint:1,2,0.5", GOLDEN, 1, 0, 32, 1, 4000, seed=2)
    assert abs(rec.value - exact) < 5 * rec.stderr
    with pytest.raises(ValueError):
        mc_moment("twopoint:1,2,0.5", GOLDEN, 1, 0, 32, 1, 10, seed=2)


def test_bounds_monotone_and_logspace():
    assert bound_mom_ii(64, 2, 0.7, 0.1) < bound_mom_ii(128, 2, 0.7, 0.1)
    assert bound_mom_i(64, 1, 4.0, 0.2, 2.0) == pytest.approx(64 * 64 / (4.0 * 0.04))
    assert math.isinf(bound_mom_ii(1024, 3, 1e-3, 1e-60))
    with pytest.raises(ZeroDivisionError):
        bound_mom_ii(10, 1, 1.0, 0.0)


def test_f_mns_direct_sum():
    x = [0.9, 1.1j, -0.5]
    m, n = 2, 6
    ref = 0
    for l1 in range(m + 1, m + n + 1):
        for l2 in range(l1 + 1, m + n + 1):
            for l3 in range(l2 + 1, m + n + 1):
                ref += x[0] ** l1 * x[1] ** l2 * x[2] ** l3
    assert f_mns_eval(x, m, n) == pytest.approx(ref, rel=1e-12)


def test_f_mns_bound_holds_on_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(500):
        s = int(rng.integers(1, 9))
        n = int(rng.integers(1, 65))
        m = int(rng.integers(0, 20))
        x = rng.random(s) * np.exp(2j * np.pi * rng.random(s))
        delta = float(rng.uniform(0.01, 0.99))
        assert abs(f_mns_eval(x, m, n)) <= f_mns_bound(x, delta, m, n).value * (1 + 1e-12)


def test_disjoint_interval_selection():
    iv = [(1, 3), (2, 2), (3, 5), (4, 4), (6, 6)]
    assert max_disjoint_intervals(iv) == [(2, 2), (4, 4), (6, 6)]
    assert sorted(near_one_intervals([1.0, -1.0, -1.0], 1e-9)) == [(1, 1), (1, 3), (2, 3)]


def test_exp_sum_and_erdos_turan():
    cfg = WalkConfig("twopoint:1,2,0.5", "golden", 1024, harmonics=(1, 2, 3, 4), seed=4)
    tr = simulate(cfg)
    val, err = exp_sum(tr, 2, 1024, with_error=True)
    assert abs(val - np.exp(2j * np.pi * tr.points[2]).sum()) <= err + 1e-9
    et = erdos_turan_bound(tr, 1024, 4)
    assert extreme_discrepancy(tr.points[1]) <= et
