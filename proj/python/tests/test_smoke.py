import math

import numpy as np
import pytest

import adns


def test_linear_algebra_roundtrip():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 4))
    u, sigma, vt = adns.thin_svd(a)
    assert np.allclose(u @ np.diag(sigma) @ vt, a, atol=1e-10)
    t = adns.rank_k_truncate(a, 2)
    assert math.isclose(np.linalg.norm(a - t), math.hypot(sigma[2], sigma[3]), rel_tol=1e-9)
    vals, vecs = adns.sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(vals, [3.0, 1.0])


def test_null_space_operations():
    basis = adns.extract_null_space(np.diag([10.0, 1.0, 0.5]), 3.0)
    assert basis.shape == (3, 2)
    g = np.array([[1.0, 2.0, 3.0]])
    p = adns.project_gradient(g, basis)
    assert np.allclose(p, [[0.0, 2.0, 3.0]])
    e1 = np.array([[1.0], [0.0], [0.0]])
    merged = adns.merge_shared_low_rank(e1, e1, "Avg", 1.0)
    assert merged.shape == (3, 1)
    assert adns.merge_random(e1, e1, 2, 7).shape == (3, 1)
    assert math.isclose(adns.alpha_at(160, 150, 10, 5), 160 - 40 / 9)


def test_metrics():
    rows = [[0.9], [0.7, 0.8]]
    assert math.isclose(adns.acc(rows), 0.75)
    assert math.isclose(adns.bwt(rows), -0.2)
    assert math.isclose(adns.la(rows), 0.85)
    with pytest.raises(ValueError):
        adns.acc([[0.9], [0.7]])


def test_testbed_bounds_hold():
    r = adns.quadratic_testbed(0)
    assert r["plasticity"]["precondition_met"]
    assert r["plasticity"]["slack"] >= -1e-8
    assert "premise_held" in r["stability"]


def test_config_errors_and_run():
    with pytest.raises(adns.ConfigError, match="trainer.alpha_min"):
        adns.normalize_config('{"stream": {}, "trainer": {"alpha_max": 2, "alpha_min": 5}}')
    runs = adns.run({
        "stream": {"tasks": 2, "dim": 6, "samples_per_class": 30},
        "trainer": {"epochs": 2, "model": {"hidden": [8]}},
        "seeds": [0],
    })
    assert len(runs) == 1
    assert 0.0 <= runs[0]["ACC"] <= 1.0
    assert runs[0]["tasks"] == 2
    suite = adns.standard_suite_config()
    assert suite["stream"]["tasks"] == 5
