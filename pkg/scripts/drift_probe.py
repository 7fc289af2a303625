"""Compare the jump-chain drift with the per-state ratio average and the
closed-form drift on random specs, and list sign disagreements.

    python3 scripts/drift_probe.py --count 200 --seed 1
"""

import argparse

import numpy as np

from retrial_inventory.jump_chain import compute_limits
from retrial_inventory.model import EnvironmentParams, InventoryPolicy, ModelSpec
from retrial_inventory.scenario import BUNDLED, load_scenario
from retrial_inventory.stability import (
    closed_form_drift,
    drift_scalar_sum,
    numerical_drift,
    solve_pi_star,
    traffic_intensity,
)


def random_spec(rng, m, n_inv, stable):
    """Irreducible random environment, all theta > 0, lambda rescaled to a target rho."""
    Q = rng.uniform(0.0, 3.0, (m, m)) * (rng.random((m, m)) < 0.6)
    Q += np.roll(np.eye(m), 1, axis=1) * rng.uniform(0.2, 2.0) if m > 1 else 0.0
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    lam, mu = rng.uniform(0.2, 3.0, m), rng.uniform(0.5, 5.0, m)
    xi, alpha, theta = rng.uniform(0.0, 1.0, m), rng.uniform(0.5, 4.0, m), rng.uniform(0.3, 3.0, m)
    rho = np.sum(lam * (alpha + xi)) / np.sum(mu * alpha)
    lam = lam * (rng.uniform(0.3, 0.85) if stable else rng.uniform(1.2, 3.0)) / rho
    env = EnvironmentParams(lam=lam, mu=mu, xi=xi, alpha=alpha, theta=theta, Q=Q)
    return ModelSpec(env, InventoryPolicy(0, n_inv))


def probe(spec):
    lim = compute_limits(spec)
    D_star = numerical_drift(lim, solve_pi_star(lim))
    return traffic_intensity(spec)[0], D_star, drift_scalar_sum(spec), closed_form_drift(spec)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for name in BUNDLED:
        rho, D_star, D_sum, D = probe(load_scenario(name).spec)
        print(f"{name}: rho={rho:.6f} D*={D_star:+.6g} ratio-average={D_sum:+.6g} D={D:+.6g}")

    rng = np.random.default_rng(args.seed)
    gaps_by_m = {}
    for k in range(args.count):
        m = int(rng.integers(1, 6))
        spec = random_spec(rng, m, int(rng.integers(1, 4)), stable=bool(k % 2))
        rho, D_star, D_sum, D = probe(spec)
        gaps_by_m.setdefault(m, []).append(abs(D_star - D_sum))
        if np.sign(D_star) != np.sign(D):
            print(f"  sign disagreement: spec {k} m={m} rho={rho:.4f} D*={D_star:+.4g} D={D:+.4g}")
    for m in sorted(gaps_by_m):
        g = np.array(gaps_by_m[m])
        print(f"m={m}: {len(g)} specs, max |D* - ratio-average| = {g.max():.3g}")


if __name__ == "__main__":
    main()
