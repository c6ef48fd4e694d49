import json
import math

import pytest

import wtpdebias as w


def test_basic_debias_hits_dc_mean():
    r = w.debias([10.0, 20.0, 30.0], 15.0)
    assert r["alpha_hat"] == pytest.approx(5.0)
    assert r["debiased"] == pytest.approx([5.0, 15.0, 25.0])
    assert sum(r["debiased"]) / 3 == pytest.approx(15.0, abs=1e-12)


def test_full_without_cov_is_rejected():
    with pytest.raises(w.WtpError, match="INVALID_CONFIG"):
        w.debias([1.0, 2.0], 1.0, procedure="full")


def test_theoretical_cov():
    assert w.theoretical_cov(13.041, 10.954) == pytest.approx(2.087)


def test_simulate_fit_and_optimize():
    truth = w.sample_true_wtp(2000, seed=3)
    assert len(truth) == 2000 and all(15 <= v <= 85 for v in truth)
    grid = [float(g) for g in range(0, 101, 5)]
    cues, accepts = w.simulate_dc(truth, grid, seed=4)
    fit = w.fit_dc(cues, accepts, grid)
    assert fit["slope"] < 0
    m = w.dc_mean(cues, accepts, grid=grid)
    assert 40 < m < 65
    assert w.dc_mean(cues, accepts, mode="nonparametric", grid=grid) > 0
    opt = w.optimize_price(fit["intercept"], fit["slope"], cost=5.0)
    assert opt["price"] > 5.0 and opt["profit"] > 0


def test_optimizer_interior():
    opt = w.optimize_price(0.0, -1.0, cost=0.0, market_size=1.0, p_max=20.0)
    assert 0 < opt["price"] < 2


def test_study_small():
    r = w.run_study("parametric", n_samples=20, seed=1)
    assert r["mode"] == "parametric"
    assert len(r["cells"]) > 0


def test_pipeline_roundtrip(tmp_path):
    code, out, err = w.run_pipeline("simulate", {"seed": 7, "out": str(tmp_path / "sim")})
    assert code == 0, err
    manifest = json.loads((tmp_path / "sim" / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert (tmp_path / "sim" / "oe.csv").exists()
    code, out, err = w.run_pipeline("nope", {"out": str(tmp_path / "x")})
    assert code != 0
