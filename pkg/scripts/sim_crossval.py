"""Simulation against the analytic solution for the bundled scenarios.

    python3 scripts/sim_crossval.py --truncation 300 [--replications 20 --horizon 2e5 --warmup 1e4]
"""

import argparse
import time

from retrial_inventory.cli import render_table
from retrial_inventory.measures import compute_report
from retrial_inventory.scenario import BUNDLED, load_scenario
from retrial_inventory.simulator import SimConfig, simulate
from retrial_inventory.solver import solve_steady_state

MEASURES = ("p_idle", "p_busy", "p_failed", "L_R", "L", "B_inv")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--truncation", type=int, default=300)
    ap.add_argument("--replications", type=int)
    ap.add_argument("--horizon", type=float)
    ap.add_argument("--warmup", type=float)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    rows = []
    for name in BUNDLED:
        sc = load_scenario(name)
        rep = compute_report(solve_steady_state(sc.spec, args.truncation, keep_rate_matrices=False), sc.spec)
        cfg = SimConfig(
            horizon=args.horizon or sc.sim.horizon,
            warmup=sc.sim.warmup if args.warmup is None else args.warmup,
            replications=args.replications or sc.sim.replications,
            seed=sc.sim.seed if args.seed is None else args.seed,
            orbit_cap=sc.sim.orbit_cap,
        )
        t0 = time.perf_counter()
        est = simulate(sc.spec, cfg)
        print(f"{name}: {est.events} events in {time.perf_counter() - t0:.1f}s")
        for m in MEASURES:
            e, a = est[m], getattr(rep, m)
            rows.append([name, m, a, e.mean, e.halfwidth, (e.mean - a) / e.halfwidth * 1.96 if e.halfwidth else 0.0, e.covers(a)])
    print(render_table(["scenario", "measure", "analytic", "simulated", "halfwidth", "z", "covered"], rows))


if __name__ == "__main__":
    main()
