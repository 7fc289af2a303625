"""How L_R and the status marginals move with the truncation level.

    python3 scripts/truncation_sweep.py high_traffic --levels 75 150 300 500
"""

import argparse

from retrial_inventory.cli import render_table
from retrial_inventory.measures import compute_report
from retrial_inventory.scenario import load_scenario
from retrial_inventory.solver import CLOSURES, solve_steady_state


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("scenario")
    ap.add_argument("--levels", type=int, nargs="+", default=[75, 150, 300])
    ap.add_argument("--closures", nargs="+", choices=CLOSURES, default=list(CLOSURES))
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    rows = []
    for closure in args.closures:
        prev = None
        for R in args.levels:
            steady = solve_steady_state(sc.spec, R, closure=closure, keep_rate_matrices=False)
            rep = compute_report(steady, sc.spec)
            change = "" if prev is None else f"{(rep.L_R - prev) / prev:+.3%}"
            rows.append([closure, R, rep.L_R, change, rep.p_idle, rep.p_busy, rep.p_failed, f"{steady.tail_mass_bound:.2e}"])
            prev = rep.L_R
    print(render_table(["closure", "R*", "L_R", "change", "Idle", "Busy", "Failure", "tail"], rows))


if __name__ == "__main__":
    main()
