import math
import os

import numpy as np
import pytest

import slowfast

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "..", "configs")


def test_default_scenario_constants():
    s = slowfast.Scenario.default()
    assert s.dim_x == 32 and s.dim_y == 16 and s.dim3 == 8
    L = 0.5 * math.sqrt(2.0)
    assert s.lipschitz == pytest.approx(L)
    mu = 0.5 * (2.0 - L)
    assert s.mu == pytest.approx(mu)
    c = 1.0 - L / (2.0 - mu)
    assert s.epsilon0() == pytest.approx(c * mu / (L + c * 1.0), rel=1e-12)
    eps = 0.1
    assert s.contraction(0.1) == pytest.approx(eps * L / (mu - eps) + L / (2.0 - mu), rel=1e-12)


def test_check_reports_verdicts():
    report = slowfast.check(slowfast.Scenario.default())
    assert report["overall"]
    names = {v["name"] for v in report["verdicts"]}
    assert {"H1", "H2", "H3", "H4", "H5"} <= names
    assert all(v["pass"] for v in report["verdicts"])


def test_gap_violation_and_parse_errors():
    text = slowfast.default_yaml().replace("kappa: 2.0", "kappa: 0.4")
    report = slowfast.check(slowfast.Scenario.from_yaml(text))
    assert not report["overall"]
    with pytest.raises(slowfast.ParseError, match="system.sigma2"):
        slowfast.Scenario.from_yaml(slowfast.default_yaml().replace("  sigma2: 0.5\n", ""))


def test_simulate_decoupled_gap_decay():
    s = slowfast.Scenario.load(os.path.join(CONFIGS, "decoupled.yaml"))
    out = slowfast.simulate(s, horizon=0.5, seed=3, reduced_init="slow")
    assert out["x"].shape == (101, s.dim_x)
    t, gap = out["t"], out["gap"]
    keep = gap > 1e-12
    slope = np.polyfit(t[keep], np.log(gap[keep]), 1)[0]
    assert slope == pytest.approx(-s.gamma2 / s.epsilon, rel=0.2)
    np.testing.assert_array_equal(out["x"], slowfast.simulate(s, horizon=0.5, seed=3, reduced_init="slow")["x"])


def test_manifold_point_contracts():
    s = slowfast.Scenario.default()
    res = slowfast.manifold_point(s, s.initial_x(), seed=2, epsilon=0.1)
    assert res["y"].shape == (s.dim_y,)
    assert max(res["ratios"]) <= res["contraction"] + 0.05


def test_filter_pair_small():
    s = slowfast.Scenario.default()
    res = slowfast.filter_pair(s, seed=4, particles=30, times=[0.1, 0.2])
    assert res["full"]["pi"].shape == (2, 16)
    assert np.all(res["distance"] >= 0.0)
    assert np.all(res["full"]["ess"] > 0.0)


def test_run_command(tmp_path):
    code = slowfast.run_command("check", out=str(tmp_path))
    assert code == 0
    assert (tmp_path / "manifest.json").exists()
