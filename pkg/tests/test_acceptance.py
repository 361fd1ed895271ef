"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in the pytest terminal summary.  Long runs (the
discrepancy curves and their rerun) are shared through module fixtures.
"""

import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from alphawalk.alpha import make_alpha
from alphawalk.config import ExperimentConfig
from alphawalk.discrepancy import (brute_extreme_discrepancy, brute_star_discrepancy,
                                   extreme_discrepancy, star_discrepancy)
from alphawalk.experiments import run, write_report
from alphawalk.moments import (f_mns_bound, f_mns_eval, moment_second_closed,
                               moment_via_partitions, moment_via_paths)
from oracles import interval_discrepancy

CURVES = {
    "golden": ("golden", "twopoint:1,2,0.5", [0.40, 0.60]),
    "power4": ("power:4", "twopoint:1,2,0.5", [0.18, 0.32]),
    "heavy": ("power:8", "symzeta:0.5", [0.18, 0.32]),
}


def report(log, n, passed, detail):
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'} {detail}"
    print(line)
    log.append(line)
    return passed


def curve_config(name, workers=1):
    alpha, dist, window = CURVES[name]
    return ExperimentConfig(kind="et-check", alpha=alpha, dist=dist, n_max=1 << 20, replicas=16,
                            seed=0, workers=workers, et=True, fit_min_n=1 << 10,
                            tau_range=window)


@pytest.fixture(scope="module")
def curves():
    out = {}
    for name in CURVES:
        t = time.perf_counter()
        out[name] = (run(curve_config(name)), time.perf_counter() - t)
    return out


# 1 ---------------------------------------------------------------------------


def test_criterion_1_convergent_facts(criterion_log):
    t = time.perf_counter()
    bad = []
    for spec, depth in (("golden", 40), ("sqrt2", 40), ("e", 40), ("power:4", 10)):
        alpha = make_alpha(spec)
        a = alpha.partial_quotients(depth + 1)
        if not (alpha.q(1) == 1 and alpha.q(2) == a[1]):
            bad.append((spec, "initial"))
        for n in range(2, depth + 1):
            p, q = alpha.pq(n)
            p1, q1 = alpha.pq(n - 1)
            qn1 = alpha.q(n + 1)
            lo, hi = alpha.convergent(n).abs_lo, alpha.convergent(n).abs_hi
            if not Fraction(1, qn1 + q) <= lo <= hi <= Fraction(1, qn1):
                bad.append((spec, n, "i"))
            if alpha.convergent(n).sign != (-1) ** (n + 1):
                bad.append((spec, n, "ii"))
            if qn1 != a[n] * q + q1:
                bad.append((spec, n, "iii"))
            if p * q1 - q * p1 != (-1) ** n:
                bad.append((spec, n, "iv"))
    dt = time.perf_counter() - t
    ok = report(criterion_log, 1, not bad and dt < 1.0,
                f"convergent facts i-iv, {len(bad)} violations, {dt:.2f} s (limit 1 s)")
    assert ok, bad


# 2 ---------------------------------------------------------------------------


def test_criterion_2_discrepancy_oracles(criterion_log):
    rng = np.random.default_rng(2)
    sets = [rng.random(int(rng.integers(1, 65))) for _ in range(1000)]
    t = time.perf_counter()
    worst = 0.0
    for x in sets:
        worst = max(worst, abs(extreme_discrepancy(x) - brute_extreme_discrepancy(x)),
                    abs(star_discrepancy(x) - brute_star_discrepancy(x)))
    dt = time.perf_counter() - t
    # a slower, independent interval scan on a subset
    for x in sets[:100]:
        e, s = interval_discrepancy(x)
        worst = max(worst, abs(extreme_discrepancy(x) - e), abs(star_discrepancy(x) - s))
    ok = report(criterion_log, 2, worst <= 1e-12 and dt < 10,
                f"1000 sets N<=64, max |formula - brute| = {worst:.2e} (tol 1e-12), {dt:.2f} s")
    assert ok


# 3 ---------------------------------------------------------------------------


def test_criterion_3_moment_formulas(criterion_log):
    t = time.perf_counter()
    worst = 0.0
    count = 0
    for dist in ("twopoint:1,2,0.5", "twopoint:-1,1,0.5"):
        for spec in ("golden", "sqrt2"):
            alpha = make_alpha(spec)
            for n in range(1, 7):
                for p in (1, 2):
                    for h in range(1, 5):
                        a = moment_via_partitions(dist, alpha, h, 0, n, p).value
                        vals = [moment_via_paths(dist, alpha, h, 0, n, p).value]
                        if p == 1:
                            vals.append(moment_second_closed(dist, alpha, h, n).value)
                        for v in vals:
                            worst = max(worst, abs(a - v) / abs(v))
                        count += 1
    dt = time.perf_counter() - t
    ok = report(criterion_log, 3, worst <= 1e-10 and dt < 60,
                f"{count} cases, max relative error {worst:.2e} (tol 1e-10), {dt:.1f} s")
    assert ok


# 4 ---------------------------------------------------------------------------


def test_criterion_4_moment_bounds(criterion_log):
    t = time.perf_counter()
    runs = []
    for spec in ("golden", "power:4"):
        runs.append(run(ExperimentConfig(kind="moment-check", alpha=spec, dist="twopoint:1,2,0.5",
                                         condition="second", moment_replicas=10000, seed=4)))
        runs.append(run(ExperimentConfig(kind="moment-check", alpha=spec, dist="twopoint:-1,1,0.5",
                                         condition="first", beta=2.0, moment_replicas=10000, seed=4)))
    dt = time.perf_counter() - t
    viol = sum(r.body.get("violations", 0) for r in runs)
    records = sum(r.body.get("records", 0) for r in runs)
    certified = all(r.body["certificate"]["verdict"] == "certified" for r in runs)
    ok = report(criterion_log, 4, certified and viol == 0 and records == 4 * 240 and dt < 600,
                f"{records} moments, {viol} beyond 4 stderr, certificates "
                f"{'ok' if certified else 'missing'}, {dt:.0f} s")
    assert ok


# 5 ---------------------------------------------------------------------------


def test_criterion_5_f_mns_lemma(criterion_log):
    rng = np.random.default_rng(5)
    t = time.perf_counter()
    viol = 0
    for i in range(10000):
        s = int(rng.integers(1, 9))
        n = int(rng.integers(1, 65))
        m = int(rng.integers(0, 65))
        r = rng.random(s) ** 0.25 if i % 2 else rng.random(s)
        ang = rng.random(s)
        if i % 3 == 0:
            # angles near multiples of 1/s so products of runs come close to 1
            ang = np.round(ang * s) / s + rng.normal(0, 1e-3, s)
            r = 1 - rng.random(s) * 1e-3
        x = r * np.exp(2j * np.pi * ang)
        delta = float(rng.uniform(1e-3, 1.0 - 1e-9))
        if abs(f_mns_eval(x, m, n)) > f_mns_bound(x, delta, m, n).value:
            viol += 1
    dt = time.perf_counter() - t
    ok = report(criterion_log, 5, viol == 0 and dt < 60, f"10^4 inputs, {viol} violations, {dt:.1f} s")
    assert ok


# 6 ---------------------------------------------------------------------------


def test_criterion_6_dioph_regimes(criterion_log):
    t = time.perf_counter()
    levels = list(range(6, 21))
    r1 = run(ExperimentConfig(kind="dioph-sum", alpha="golden", b=0.5, levels=levels, spread_max=3.0))
    r2 = run(ExperimentConfig(kind="dioph-sum", alpha="golden", b=1.0, levels=levels, spread_max=3.0))
    r3 = run(ExperimentConfig(kind="dioph-sum", alpha="power:4", b=0.5, levels=levels,
                              slope_range=[0.8, 1.2]))
    dt = time.perf_counter() - t
    passed = r1.ok and r2.ok and r3.ok and r3.checks and dt < 300
    ok = report(criterion_log, 6, passed,
                f"golden b=1/2 spread {r1.body['ratio_spread']:.3f}, golden b=1 spread "
                f"{r2.body['ratio_spread']:.3f} (max 3), power-rule(4) b=1/2 slope "
                f"{r3.body.get('slope', float('nan')):.3f} in [0.8, 1.2], {dt:.0f} s")
    assert ok


# 7, 8, 10 --------------------------------------------------------------------


def test_criterion_7_critical_phenomenon(criterion_log, curves):
    parts = []
    passed = True
    total = 0.0
    for name, (rep, dt) in curves.items():
        fit = rep.body["fit"]
        lo, hi = CURVES[name][2]
        good = lo <= fit["tau"] <= hi
        passed &= good
        total += dt
        parts.append(f"{name} tau={fit['tau']:.3f}+-{fit['halfwidth']:.3f} in [{lo}, {hi}]"
                     f" {'ok' if good else 'out'}")
    passed &= total < 1800
    ok = report(criterion_log, 7, passed, "; ".join(parts) + f"; {total:.0f} s")
    assert ok


def test_criterion_8_erdos_turan(criterion_log, curves):
    viol = sum(rep.body["et"]["violations"] for rep, _ in curves.values())
    checked = sum(rep.body["et"]["checkpoints"] for rep, _ in curves.values())
    ok = report(criterion_log, 8, viol == 0,
                f"{checked} checkpoints with H = ceil(sqrt N), {viol} with D_N above the bound")
    assert ok


def test_criterion_9_empty_gap(criterion_log):
    rep = run(ExperimentConfig(kind="gap-diagnostic", alpha="power:4", dist="twopoint:1,2,0.5",
                               n_max=1 << 20, replicas=16, seed=9, gap_count=3, gap_min_pass=14))
    targets = ", ".join(f"q={t['q']} N={t['N_q']}" for t in rep.body["targets"])
    ok = report(criterion_log, 9, rep.ok,
                f"{rep.body['replicas_passing']}/16 replicas empty at all of [{targets}] "
                f"(need 14), psi(k) = E[X] k, K = {rep.body['envelope']['K']:.4f}")
    assert ok


def test_criterion_10_determinism(criterion_log, curves, tmp_path):
    mismatched = []
    for name, (rep, _) in curves.items():
        first = write_report(rep, tmp_path / name / "w1")
        again = write_report(run(curve_config(name, workers=2)), tmp_path / name / "w2")
        for key, path in first.items():
            if key == "manifest":
                continue
            if Path(path).read_bytes() != Path(again[key]).read_bytes():
                mismatched.append(f"{name}/{Path(path).name}")
    ok = report(criterion_log, 10, not mismatched,
                f"rerun with workers=2: {len(mismatched)} differing data files {mismatched}")
    assert ok
