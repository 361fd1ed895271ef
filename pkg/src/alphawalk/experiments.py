"""Config-driven experiment runs and their on-disk reports.

Every run returns a :class:`RunReport`: named CSV tables, a deterministic
manifest body (config, certificates, fits, checks) and a list of checks.
Only the manifest header carries timestamps and library versions, so two
runs of the same config produce byte-identical data files and bodies.
"""

import datetime
import json
import math
import os
import platform
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .alpha import make_alpha
from .config import ConfigError, dumps, loads
from .discrepancy import gap_diagnostic
from .dioph import MAX_TERMS, dioph_sum_blocks, dioph_sum_levels, growth_fit
from .kernels import prefix_discrepancies
from .moments import (_phi_at_multiple, closed_form_second_moment, erdos_turan_terms,
                      mc_moment_sweep, moment_bound)
from .steps import parse_dist, verify_first_condition, verify_second_condition
from .walk import (WalkConfig, map_replicas, simulate, simulate_replicas, write_trace_csv,
                   write_trace_sidecar)

CSV_HEADER = "#alpha-walk-lab v1"


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    kind: str
    config: object
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)
    body: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    extra_files: dict = field(default_factory=dict)  # name -> writer(path)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_text(columns, rows):
    lines = [CSV_HEADER, ",".join(columns)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _versions():
    import numba
    import scipy

    return {"alphawalk": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def write_report(report, out_dir):
    """Write tables, extra files and manifest.json into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, (cols, rows) in sorted(report.tables.items()):
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(table_text(cols, rows))
        paths[name] = path
    for name, writer in sorted(report.extra_files.items()):
        path = os.path.join(out_dir, name)
        writer(path)
        paths[name] = path
    manifest = {
        "header": {
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "versions": _versions(),
        },
        "body": manifest_body(report),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["manifest"] = path
    return paths


def manifest_body(report):
    return {
        "kind": report.kind,
        "config": dumps(report.config),
        "files": sorted([f"{n}.csv" for n in report.tables] + list(report.extra_files)),
        "results": report.body,
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in report.checks],
        "ok": report.ok,
    }


# ---------------------------------------------------------------------------
# fits


@dataclass
class PowerFit:
    slope: float
    intercept: float
    halfwidth: float
    residuals: list
    n_points: int

    @property
    def tau(self):
        return -self.slope


def fit_power_law(Ns, Ds, min_n=1):
    """Least squares of log D against log N for N >= min_n.

    ``halfwidth`` is the 95% confidence half-width of the slope (normal
    approximation), 0 for an exact fit.
    """
    Ns = np.asarray(Ns, dtype=float)
    Ds = np.asarray(Ds, dtype=float)
    sel = Ns >= min_n
    if np.count_nonzero(sel) < 2:
        raise ValueError("need at least two checkpoints at or above min_n")
    x = np.log(Ns[sel])
    y = np.log(Ds[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    k = len(x)
    if k > 2:
        s2 = float(res @ res) / (k - 2)
        se = math.sqrt(s2 / float(((x - x.mean()) ** 2).sum()))
    else:
        se = 0.0
    return PowerFit(float(slope), float(icpt), 1.96 * se, [float(r) for r in res], k)


# ---------------------------------------------------------------------------
# discrepancy curves


def _et_hmax(cfg, N):
    if cfg.et_harmonics == "sqrt":
        return int(math.ceil(math.sqrt(N)))
    return int(cfg.et_harmonics)


def walk_config(cfg, et=None):
    et = cfg.et if et is None else et
    hmax = _et_hmax(cfg, cfg.n_max) if et else None
    return WalkConfig(cfg.dist, cfg.alpha, cfg.n_max, harmonics=tuple(cfg.harmonics),
                      seed=cfg.seed, eta=cfg.eta, precision_hmax=hmax)


def _curve_replica(cfg_text, replica, et):
    cfg = loads(cfg_text)
    wc = walk_config(cfg, et)
    tr = simulate(wc, replica, keep_path=False)
    cps = tr.checkpoints
    D, Ds = prefix_discrepancies(tr.points[1], cps)
    disc_err = 2.0 * tr.error_bound
    rows = []
    if et:
        Hs = [_et_hmax(cfg, int(N)) for N in cps]
        absT, err = erdos_turan_terms(tr, cps, max(Hs))
        for j, N in enumerate(cps):
            H = Hs[j]
            h = np.arange(1, H + 1)
            val = 6.0 / N * (N / H + float(np.sum(absT[:H, j] / h)))
            e = 6.0 / N * float(np.sum(err[:H, j] / h))
            rows.append((replica, int(N), float(D[j]), float(Ds[j]), disc_err, H, val, e))
    else:
        for j, N in enumerate(cps):
            rows.append((replica, int(N), float(D[j]), float(Ds[j]), disc_err))
    cert = dict(replica=replica, **tr.certificate())
    return rows, cert


def run_discrepancy_curve(cfg, et=None):
    et = cfg.et if et is None else et
    text = dumps(cfg)
    out = map_replicas(_curve_replica, [(text, r, et) for r in range(cfg.replicas)], cfg.workers)
    rows = [r for rs, _ in out for r in rs]
    certs = [c for _, c in out]
    cols = ["replica", "N", "D", "Dstar", "disc_err"]
    if et:
        cols += ["H", "ET", "ET_err"]
    Ns = sorted({r[1] for r in rows})
    summary = []
    med = []
    for N in Ns:
        d = np.array([r[2] for r in rows if r[1] == N])
        ds = np.array([r[3] for r in rows if r[1] == N])
        qd = np.quantile(d, [0.25, 0.5, 0.75])
        qs = np.quantile(ds, [0.25, 0.5, 0.75])
        summary.append((N, float(qd[1]), float(qd[0]), float(qd[2]),
                        float(qs[1]), float(qs[0]), float(qs[2])))
        med.append(float(qd[1]))
    report = RunReport("discrepancy-curve", cfg)
    report.tables["curve_replicas"] = (cols, rows)
    report.tables["curve_summary"] = (["N", "median_D", "q1_D", "q3_D", "median_Dstar",
                                       "q1_Dstar", "q3_Dstar"], summary)
    body = {"certificates": certs}
    try:
        fit = fit_power_law(Ns, med, cfg.fit_min_n)
        body["fit"] = {"tau": fit.tau, "slope": fit.slope, "halfwidth": fit.halfwidth,
                       "residuals": fit.residuals, "n_points": fit.n_points,
                       "min_n": cfg.fit_min_n}
        Nn = np.array(Ns, dtype=float)
        ok = Nn >= max(cfg.fit_min_n, 16)
        if np.count_nonzero(ok) >= 2:
            corr = np.array(med)[ok] * np.sqrt(Nn[ok] / np.log(np.log(Nn[ok])))
            body["fit"]["loglog_corrected_slope"] = fit_power_law(Nn[ok], corr).slope
        if cfg.tau_range:
            lo, hi = cfg.tau_range
            report.checks.append(Check("tau_in_range", lo <= fit.tau <= hi,
                                       f"tau={fit.tau!r} window=[{lo!r}, {hi!r}]"))
    except ValueError as exc:
        body["fit"] = {"error": str(exc)}
        if cfg.tau_range:
            report.checks.append(Check("tau_in_range", False, str(exc)))
    if et:
        viol = [r for r in rows if r[2] > r[6]]
        certified = sum(1 for r in rows if r[2] + r[4] <= r[6] - r[7])
        body["et"] = {"checkpoints": len(rows), "violations": len(viol),
                      "certified": certified,
                      "min_margin": min(r[6] - r[2] for r in rows)}
        report.checks.append(Check("erdos_turan", not viol,
                                   f"{len(viol)} of {len(rows)} checkpoints have D_N > ET bound"))
    report.body = body
    return report


def run_fit_exponent(cfg):
    report = run_discrepancy_curve(cfg)
    report.kind = "fit-exponent"
    return report


def run_et_check(cfg):
    report = run_discrepancy_curve(cfg, et=True)
    report.kind = "et-check"
    return report


# ---------------------------------------------------------------------------
# moments


def run_moment_check(cfg):
    dist = parse_dist(cfg.dist)
    alpha = make_alpha(cfg.alpha)
    if cfg.condition == "second":
        cert = verify_second_condition(dist, cfg.grid2_n, cfg.d_max)
    elif cfg.condition == "first":
        cert = verify_first_condition(dist, cfg.beta, cfg.grid_n)
    else:
        raise ConfigError("condition must be 'first' or 'second'")
    report = RunReport("moment-check", cfg)
    report.body["certificate"] = cert.as_dict()
    if not cert.certified:
        report.checks.append(Check("condition_certified", False, cert.verdict))
        return report
    recs = mc_moment_sweep(dist, alpha, cfg.moment_h, cfg.moment_n, cfg.moment_p,
                           cfg.moment_replicas, cfg.seed, m=cfg.moment_m)
    rows = []
    viol = 0
    worst = -math.inf
    for r in recs:
        kind, logb = moment_bound(cert, alpha, r.h, r.n, r.p)
        exact = None
        if r.p == 1:
            exact = closed_form_second_moment(_phi_at_multiple(dist, alpha, -r.h), r.n)
        bound = math.exp(logb) if logb < 709 else math.inf
        lratio = math.log(r.value) - logb if r.value > 0 else -math.inf
        ratio = math.exp(lratio)
        if r.value - 4 * r.stderr > 0 and math.log(r.value - 4 * r.stderr) > logb:
            viol += 1
        worst = max(worst, lratio)
        rows.append((r.m, r.n, r.p, r.h, r.value, r.stderr, exact, kind, bound, ratio))
    report.tables["moments"] = (["m", "n", "p", "h", "empirical", "stderr", "exact",
                                 "bound_kind", "bound", "ratio"], rows)
    report.body.update({"records": len(rows), "violations": viol, "max_log_ratio": worst})
    report.checks.append(Check("moment_bounds", viol == 0,
                               f"{viol} of {len(rows)} moments exceed the bound by 4 stderr"))
    return report


# ---------------------------------------------------------------------------
# diophantine sums


def run_dioph_sum(cfg):
    alpha = make_alpha(cfg.alpha)
    b = cfg.b
    fit = growth_fit(alpha, b, cfg.levels)
    Hs = [1 << v for v in sorted(cfg.levels)]
    vals = dioph_sum_levels(alpha, Hs, b)
    report = RunReport("dioph-sum", cfg)
    report.tables["dioph_levels"] = (["H", "sum", "certified_rel_err"],
                                     [(v.H, v.value, v.rel_err) for v in vals])
    cap = min(Hs[-1], MAX_TERMS)
    n = 3
    while alpha.q(n + 1) - 1 <= cap:
        n += 1
    body = {"regime": fit.regime, "gamma_hat": fit.gamma_hat}
    if n >= 4:
        rep = dioph_sum_blocks(alpha, n, b)
        report.tables["dioph_blocks"] = (
            ["k", "q_k", "A_sum", "B_sum", "C_sum"],
            [(blk.k, blk.q_k, blk.sum_a, blk.sum_b, blk.sum_c) for blk in rep.blocks])
        body["blocks"] = {"n": n, "total": rep.total, "log_s_qn": rep.log_s_qn,
                          "convergent_sum": rep.convergent_sum}
    if fit.regime == "log":
        body.update({"s": fit.s, "ratios": fit.ratios, "ratio_spread": fit.ratio_spread})
        report.checks.append(Check("log_growth", fit.ratio_spread <= cfg.spread_max,
                                   f"spread={fit.ratio_spread!r} max={cfg.spread_max!r}"))
    else:
        body.update({"slope": fit.slope, "predicted_slope": fit.predicted_slope,
                     "residual": fit.residual})
        if cfg.slope_range:
            lo, hi = cfg.slope_range
            report.checks.append(Check("power_growth", lo <= fit.slope <= hi,
                                       f"slope={fit.slope!r} window=[{lo!r}, {hi!r}]"))
    report.body = body
    return report


# ---------------------------------------------------------------------------
# condition certificates


def run_cond_check(cfg):
    dist = parse_dist(cfg.dist)
    report = RunReport("cond-check", cfg)
    certs = [verify_first_condition(dist, cfg.beta, cfg.grid_n)]
    if math.isfinite(dist.abs_mean):
        certs.append(verify_second_condition(dist, cfg.grid2_n, cfg.d_max))
    rows = []
    for c in certs:
        rows.append((c.kind, c.beta, c.d, c.c, c.grid_n,
                     " ".join(repr(float(a)) for a in c.argmin), c.verdict))
        report.checks.append(Check(f"{c.kind}_condition", c.certified,
                                   f"d={c.d} c={c.c!r} verdict={c.verdict}"))
    report.tables["conditions"] = (["kind", "beta", "d", "c", "grid_n", "argmin", "verdict"], rows)
    report.body = {"certificates": [c.as_dict() for c in certs]}
    return report


# ---------------------------------------------------------------------------
# the empty-gap diagnostic


def gap_targets(alpha, n_max, count):
    """The ``count`` largest distinct convergent denominators with 2 <= q_n <= n_max."""
    out = []
    n = 2
    while alpha.q(n) <= n_max:
        q = alpha.q(n)
        if q >= 2 and (not out or out[-1][1] != q):
            out.append((n, q))
        n += 1
    return out[-count:]


def envelope_constant(cfg, dist):
    """K with |S_k| <= K psi(k), psi(k) = E[X] k."""
    if cfg.envelope_k > 0:
        return cfg.envelope_k
    if not dist.is_finite or not dist.mean:
        raise ConfigError("set envelope_k for distributions without bounded steps and nonzero mean")
    return max(abs(v) for v in dist.values) / abs(dist.mean)


def gap_horizon(alpha, n, K, mean, n_max):
    """Largest N <= n_max with K psi(N) ||q_n alpha|| < 1/3 (certified upper ||q_n alpha||)."""
    c = alpha.convergent(n)
    # K * mean * N * abs_hi < 1/3
    lim = Fraction(1, 3) / (Fraction(K).limit_denominator(10 ** 12) * Fraction(abs(mean)) * c.abs_hi)
    N = math.ceil(lim) - 1
    return int(max(0, min(n_max, N)))


def _gap_replica(cfg_text, replica, targets):
    cfg = loads(cfg_text)
    tr = simulate(walk_config(cfg, et=False), replica, keep_path=False)
    rows = []
    for n, q, Nq in targets:
        cnt = gap_diagnostic(tr.points[1][:Nq], q, margin=tr.error_bound)
        rows.append((replica, n, q, Nq, cnt))
    return rows


def run_gap_diagnostic(cfg):
    dist = parse_dist(cfg.dist)
    alpha = make_alpha(cfg.alpha)
    K = envelope_constant(cfg, dist)
    targets = []
    for n, q in gap_targets(alpha, cfg.n_max, cfg.gap_count):
        targets.append((n, q, gap_horizon(alpha, n, K, dist.mean, cfg.n_max)))
    text = dumps(cfg)
    out = map_replicas(_gap_replica, [(text, r, targets) for r in range(cfg.replicas)], cfg.workers)
    rows = [r for rs in out for r in rs]
    passes = sum(1 for rs in out if all(r[4] == 0 for r in rs))
    report = RunReport("gap-diagnostic", cfg)
    report.tables["gap_counts"] = (["replica", "n", "q", "N_q", "count"], rows)
    report.body = {"envelope": {"psi": "E[X] k", "K": K, "mean": dist.mean},
                   "targets": [{"n": n, "q": str(q), "N_q": Nq} for n, q, Nq in targets],
                   "replicas_passing": passes}
    report.checks.append(Check("empty_gap", passes >= cfg.gap_min_pass and len(targets) == cfg.gap_count,
                               f"{passes} of {cfg.replicas} replicas have all gaps empty"))
    return report


# ---------------------------------------------------------------------------
# plain simulation dump


def run_simulate(cfg):
    wc = walk_config(cfg, et=False)
    traces = simulate_replicas(wc, cfg.replicas, cfg.workers)
    report = RunReport("simulate", cfg)
    report.extra_files["trace.csv"] = lambda path: write_trace_csv(traces, path)
    report.extra_files["trace.json"] = lambda path: write_trace_sidecar(traces, path)
    report.body = {"certificates": [dict(replica=t.replica, **t.certificate()) for t in traces]}
    return report


RUNNERS = {
    "discrepancy-curve": run_discrepancy_curve,
    "fit-exponent": run_fit_exponent,
    "moment-check": run_moment_check,
    "dioph-sum": run_dioph_sum,
    "cond-check": run_cond_check,
    "et-check": run_et_check,
    "gap-diagnostic": run_gap_diagnostic,
    "simulate": run_simulate,
}


def run(cfg):
    return RUNNERS[cfg.kind](cfg)
