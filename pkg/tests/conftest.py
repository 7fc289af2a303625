import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from retrial_inventory.model import EnvironmentParams, InventoryPolicy, ModelSpec
from retrial_inventory.scenario import load_scenario

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=10, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def low():
    return load_scenario("low_traffic")


@pytest.fixture(scope="session")
def high():
    return load_scenario("high_traffic")


def make_spec(lam, mu, xi, alpha, theta, Q=None, s=0, S=1):
    m = len(lam)
    if Q is None:
        Q = np.zeros((m, m))
    return ModelSpec(EnvironmentParams(lam=lam, mu=mu, xi=xi, alpha=alpha, theta=theta, Q=Q), InventoryPolicy(s, S))


def random_generator(rng, m):
    """Irreducible generator: random rates plus a cycle through all states."""
    if m == 1:
        return np.zeros((1, 1))
    Q = rng.uniform(0.0, 3.0, (m, m)) * (rng.random((m, m)) < 0.6)
    Q += np.roll(np.eye(m), 1, axis=1) * rng.uniform(0.2, 2.0)
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def random_spec(rng, m, n_inv, stable=None):
    """Random spec; ``stable`` forces rho < 1 (True) or rho > 1 (False)."""
    lam = rng.uniform(0.2, 3.0, m)
    mu = rng.uniform(0.5, 5.0, m)
    xi = rng.uniform(0.0, 1.0, m)
    alpha = rng.uniform(0.5, 4.0, m)
    theta = rng.uniform(0.3, 3.0, m)
    if stable is not None:
        rho = np.sum(lam * (alpha + xi)) / np.sum(mu * alpha)
        target = rng.uniform(0.3, 0.85) if stable else rng.uniform(1.2, 3.0)
        lam = lam * target / rho
    s = int(rng.integers(0, 3))
    return make_spec(lam, mu, xi, alpha, theta, random_generator(rng, m), s=s, S=s + n_inv)


@st.composite
def small_specs(draw, max_m=2, max_inv=2, stable=True):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(1, max_m))
    n_inv = draw(st.integers(1, max_inv))
    return random_spec(np.random.default_rng(seed), m, n_inv, stable=stable)


@pytest.fixture(scope="session")
def low_steady(low):
    from retrial_inventory.solver import solve_steady_state

    return solve_steady_state(low.spec, truncation=75)


@pytest.fixture(scope="session")
def high_steady(high):
    from retrial_inventory.solver import solve_steady_state

    return solve_steady_state(high.spec, truncation=75)
