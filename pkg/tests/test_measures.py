import numpy as np
import pytest

from oracles import power_stationary
from retrial_inventory.measures import PerformanceReport, ReducibleEnvironmentError, compute_report, env_stationary

# low-traffic reference row
LOW_ROW = {
    "Idle": 0.3782, "Busy": 0.3412, "Failure": 0.2806, "L_R": 7.1310, "L": 7.4722,
    "W_R": 1.7140, "W": 1.7960, "B_inv": 23.0, "D_S": 44.9002,
}


@pytest.fixture(scope="module")
def low_report(low, low_steady):
    return compute_report(low_steady, low.spec)


@pytest.fixture(scope="module")
def high_report(high, high_steady):
    return compute_report(high_steady, high.spec)


def test_symmetric_two_state():
    np.testing.assert_allclose(env_stationary(np.array([[-1.0, 1.0], [1.0, -1.0]])), [0.5, 0.5])


def test_bundled_environment(low):
    Q = low.spec.env.Q
    p = env_stationary(Q)
    assert p.shape == (7,) and p.min() > 0
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(p @ Q)) < 1e-10
    np.testing.assert_allclose(p, power_stationary(Q), atol=1e-10)


def test_absorbing_environment_rejected():
    Q = np.array([[-1.0, 0.5, 0.5], [0.0, -1.0, 1.0], [0.0, 1.0, -1.0]])
    with pytest.raises(ReducibleEnvironmentError):
        env_stationary(Q)


def test_low_traffic_row(low_report):
    row = low_report.table_row()
    for key in ("Idle", "Busy", "Failure"):
        assert row[key] == pytest.approx(LOW_ROW[key], abs=1e-4)
    for key in ("L_R", "L", "W_R", "W", "D_S"):
        assert row[key] == pytest.approx(LOW_ROW[key], rel=1e-4)
    assert row["B_inv"] == pytest.approx(23.0, abs=1e-9)


def test_high_traffic_row_frozen(high_report):
    # reflecting closure at R* = 75; frozen from this implementation
    row = high_report.table_row()
    assert row["L_R"] == pytest.approx(36.3655, rel=1e-5)
    assert row["Busy"] == pytest.approx(0.7165, abs=1e-4)
    assert row["W"] == pytest.approx(9.6507, rel=1e-4)


@pytest.mark.parametrize("name", ["low_report", "high_report"])
def test_identities(name, request):
    rep = request.getfixturevalue(name)
    assert rep.L - rep.L_R == pytest.approx(rep.p_busy, abs=1e-14)
    assert rep.D_S / rep.W == pytest.approx(25.0, rel=1e-14)
    assert rep.W_R * rep.lambda_bar == pytest.approx(rep.L_R, rel=1e-14)
    assert rep.W * rep.lambda_bar == pytest.approx(rep.L, rel=1e-14)


def test_reference_row_arithmetic():
    assert LOW_ROW["L"] - LOW_ROW["L_R"] == pytest.approx(LOW_ROW["Busy"], abs=1e-9)
    assert 25 * LOW_ROW["W"] == pytest.approx(LOW_ROW["D_S"], abs=5e-4)


@pytest.mark.parametrize("name", ["low_report", "high_report"])
def test_inventory_uniform(name, request):
    rep = request.getfixturevalue(name)
    assert np.max(np.abs(rep.inventory_marginal - 1 / 25)) < 1e-6
    assert rep.B_inv == pytest.approx(rep.B_inv_uniform, abs=1e-6)
    assert rep.B_inv_uniform == 23.0


@pytest.mark.parametrize("name", ["low_report", "high_report"])
def test_probabilities_in_range(name, request):
    rep = request.getfixturevalue(name)
    for v in (rep.p_idle, rep.p_busy, rep.p_failed, *rep.orbit_marginal, *rep.inventory_marginal, *rep.p_env):
        assert 0.0 <= v <= 1.0
    assert rep.p_idle + rep.p_busy + rep.p_failed == pytest.approx(1.0, abs=1e-12)


def test_report_round_trip(low_report):
    import json

    again = PerformanceReport.from_dict(json.loads(json.dumps(low_report.to_dict())))
    assert again == low_report
