import numpy as np
import pytest
from scipy import stats

from conftest import make_spec
from retrial_inventory.measures import compute_report
from retrial_inventory.simulator import SimConfig, SimEstimates, SimulationDivergence, simulate
from retrial_inventory.solver import solve_steady_state

SHORT = SimConfig(horizon=2e3, warmup=1e2, replications=4, seed=7)


def test_deterministic(low):
    a = simulate(low.spec, SHORT)
    b = simulate(low.spec, SHORT)
    assert a == b
    assert a.to_dict() == b.to_dict()


def test_workers_do_not_change_results(low):
    assert simulate(low.spec, SHORT, workers=2) == simulate(low.spec, SHORT)


def test_seed_matters(low):
    other = SimConfig(**{**SHORT.__dict__, "seed": 8})
    assert simulate(low.spec, other)["L_R"].mean != simulate(low.spec, SHORT)["L_R"].mean


def test_no_failures_without_failure_rate(low):
    est = simulate(low.spec.with_env(xi=np.zeros(7)), SHORT)
    assert est["p_failed"].mean == 0.0
    assert all(row["p_failed"] == 0.0 for row in est.per_replication)


def test_mm1_limit():
    lam, mu = 1.0, 2.0
    spec = make_spec([lam], [mu], [0.0], [1.0], [1e4])
    est = simulate(spec, SimConfig(horizon=5e4, warmup=1e3, replications=5, seed=3))
    assert est["L"].mean == pytest.approx(lam / (mu - lam), rel=0.05)


def test_inventory_level_uniform(low):
    # a near-zero window at the horizon records the level at that instant,
    # one independent draw per replication
    reps = 500
    cfg = SimConfig(horizon=200.0, warmup=200.0 - 1e-9, replications=reps, seed=11)
    est = simulate(low.spec, cfg)
    counts = np.rint(est.inventory_marginal.mean * reps).astype(int)
    assert counts.sum() == reps
    assert stats.chisquare(counts).pvalue > 0.01


def test_time_average_inventory_close_to_uniform(low):
    est = simulate(low.spec, SimConfig(horizon=2e4, warmup=1e3, replications=4, seed=5))
    assert np.max(np.abs(est.inventory_marginal.mean - 1 / 25)) < 5e-3


def test_small_spec_agrees_with_solver():
    Q = [[-1.0, 1.0], [2.0, -2.0]]
    spec = make_spec([1.0, 0.5], [2.5, 3.0], [0.2, 0.1], [1.5, 2.0], [0.8, 1.2], Q=Q, s=1, S=3)
    rep = compute_report(solve_steady_state(spec, truncation=60), spec)
    est = simulate(spec, SimConfig(horizon=2e4, warmup=1e3, replications=10, seed=21))
    for name in ("p_idle", "p_busy", "p_failed", "L_R", "B_inv"):
        e = est[name]
        assert abs(e.mean - getattr(rep, name)) <= 4 * e.halfwidth + 1e-9, name


def test_divergence_signalled(low):
    with pytest.raises(SimulationDivergence):
        simulate(low.spec.with_env(lam=10 * low.spec.env.lam), SimConfig(horizon=1e4, warmup=0, replications=1, orbit_cap=200))


@pytest.mark.parametrize(
    "kw", [dict(warmup=10.0, horizon=5.0), dict(replications=0), dict(orbit_cap=0), dict(seed=-1)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_round_trip_and_csv(low, tmp_path):
    import csv
    import json

    est = simulate(low.spec, SHORT)
    assert SimEstimates.from_dict(json.loads(json.dumps(est.to_dict()))) == est
    path = est.write_replications_csv(tmp_path / "reps.csv")
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == SHORT.replications
    assert float(rows[0]["L_R"]) == est.per_replication[0]["L_R"]
