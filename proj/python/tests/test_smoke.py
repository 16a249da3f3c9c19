import numpy as np
import pytest

import tomoplan

S = 0.5


def mub():
    x = [np.array([[S, S], [S, S]]), np.array([[S, -S], [-S, S]])]
    y = [np.array([[S, -0.5j], [0.5j, S]]), np.array([[S, 0.5j], [-0.5j, S]])]
    z = [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]
    return tomoplan.Setup(2, [[m.astype(complex) for m in x], y, z], ["x", "y", "z"])


def test_setup():
    s = mub()
    assert s.dimension == 2 and s.config_count == 3 and s.is_minimal
    assert np.allclose(s.probabilities(np.zeros(3)), 0.5)


def test_mub_designs_are_uniform():
    s = mub()
    for w in (tomoplan.average_oed_fisher(s), tomoplan.average_oed_crb(s), tomoplan.minimal_oed(s, np.zeros(3))):
        assert np.allclose(w, 1 / 3, atol=1e-8)
    odt = tomoplan.odt_design(tomoplan.variance_matrix(s))
    assert np.allclose(odt["weights"], 1 / 3, atol=1e-8)


def test_fisher():
    F, crb = tomoplan.fisher_info(mub(), np.full(3, 1 / 3), np.zeros(3))
    assert np.allclose(F, 2 / 3 * np.eye(3))
    assert crb == pytest.approx(4.5)


def test_invalid_setup_raises():
    bad = [[np.eye(2, dtype=complex), np.eye(2, dtype=complex)]]
    with pytest.raises(tomoplan.ValidationError):
        tomoplan.Setup(2, bad)


def test_campaign_deterministic():
    s = mub()
    a = tomoplan.run_trials(s, np.full(3, 1 / 3), grid=[2, 2, 2], ntot=300, runs=20, seed=3)
    b = tomoplan.run_trials(s, np.full(3, 1 / 3), grid=[2, 2, 2], ntot=300, runs=20, seed=3)
    assert a["mse"]["inv"] == b["mse"]["inv"]
    assert a["shots"] == [100, 100, 100]


def test_cli_usage_error():
    code, _, err = tomoplan.run_cli(["design", "--spec", "missing.json", "--method", "nope"])
    assert code == 1 and "usage error" in err
