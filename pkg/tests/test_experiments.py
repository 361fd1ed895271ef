import json

import numpy as np
import pytest

from alphawalk.alpha import make_alpha
from alphawalk.cli import main
from alphawalk.config import ExperimentConfig, dumps
from alphawalk.experiments import (fit_power_law, gap_horizon, gap_targets, run, table_text,
                                   write_report)


def test_fit_exact_power_law():
    N = 2.0 ** np.arange(10, 21)
    fit = fit_power_law(N, N ** -0.5, 1024)
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.halfwidth < 1e-9


def test_fit_loglog_law():
    N = 2.0 ** np.arange(10, 21)
    fit = fit_power_law(N, np.sqrt(np.log(np.log(N)) / N), 1024)
    assert -0.56 <= fit.slope <= -0.44


def test_fit_needs_points():
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 4], [1, 0.5, 0.3], 1024)


def small(kind, **kw):
    base = dict(kind=kind, n_max=1 << 12, replicas=3, fit_min_n=64)
    base.update(kw)
    return ExperimentConfig(**base)


def test_curve_report_is_deterministic(tmp_path):
    cfg = small("discrepancy-curve", et=True)
    a, b = run(cfg), run(cfg.replace(workers=2))
    write_report(a, tmp_path / "a")
    write_report(b, tmp_path / "b")
    for name in ("curve_replicas.csv", "curve_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["body"]["results"] == mb["body"]["results"]
    assert ma["body"]["results"]["et"]["violations"] == 0


def test_degenerate_step_gives_classical_rate():
    rep = run(small("fit-exponent", dist="pmf:[(1,1.0)]", n_max=1 << 16, replicas=1,
                    fit_min_n=1024, tau_range=[0.85, 1.0]))
    assert rep.ok, rep.checks


def test_table_text_header():
    text = table_text(["a", "b"], [(1, 0.5), (2, None)])
    assert text.splitlines() == ["#alpha-walk-lab v1", "a,b", "1,0.5", "2,"]


def test_gap_targets_and_horizon():
    alpha = make_alpha("power:4")
    t = gap_targets(alpha, 1 << 20, 3)
    assert [q for _, q in t] == [2, 17, 83523]
    # K psi(N) ||q alpha|| < 1/3 with K = 4/3 and E X = 3/2
    n, q = t[1]
    N = gap_horizon(alpha, n, 4 / 3, 1.5, 1 << 20)
    d = float(alpha.convergent(n).abs_hi)
    assert 2 * N * d < 1 / 3 <= 2 * (N + 1) * d or N == 1 << 20


def test_cond_check_runner():
    rep = run(small("cond-check", grid_n=512, grid2_n=64))
    kinds = [c.name for c in rep.checks]
    assert kinds == ["first_condition", "second_condition"] and rep.ok


def test_cli_round_trip(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(dumps(small("simulate", n_max=16, replicas=2)))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    body = json.loads((out / "manifest.json").read_text())["body"]
    assert "seed = 7" in body["config"] and (out / "trace.csv").exists()
    cfg.write_text(dumps(small("dioph-sum", levels=list(range(6, 13)), spread_max=1.0)))
    assert main(["diophsum", "--config", str(cfg), "--out", str(out)]) == 1
    assert "FAIL log_growth" in capsys.readouterr().out


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("alpha = pi\n")
    assert main(["curve", "--config", str(cfg)]) == 2
    assert main(["curve", "--config", str(tmp_path / "missing.cfg")]) == 2
