"""Analytic performance rows for the bundled scenarios.

    python3 scripts/reproduce_results.py [--truncation 75] [--closure reflect]
"""

import argparse
import time

from retrial_inventory.cli import render_table
from retrial_inventory.measures import TABLE_COLUMNS, compute_report
from retrial_inventory.scenario import BUNDLED, load_scenario
from retrial_inventory.solver import CLOSURES, solve_steady_state


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--truncation", type=int, default=75)
    ap.add_argument("--closure", choices=CLOSURES, default="reflect")
    args = ap.parse_args()

    rows = []
    for name in BUNDLED:
        sc = load_scenario(name)
        t0 = time.perf_counter()
        steady = solve_steady_state(sc.spec, args.truncation, closure=args.closure, keep_rate_matrices=False)
        rep = compute_report(steady, sc.spec)
        rows.append([name, *rep.table_row().values(), f"{steady.tail_mass_bound:.2e}", f"{time.perf_counter() - t0:.1f}s"])
    print(f"R* = {args.truncation}, {args.closure} closure")
    print(render_table(["scenario", *TABLE_COLUMNS, "tail", "time"], rows))


if __name__ == "__main__":
    main()
