"""Command-line front end.

Subcommands: ``validate``, ``stability``, ``solve``, ``simulate``, ``report``.

Exit codes: 0 success, 1 usage or parse error, 2 unstable (or boundary)
model, 3 simulation divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .measures import TABLE_COLUMNS, PerformanceReport, compute_report, env_stationary
from .model import Status, validate_spec
from .scenario import Scenario, ScenarioParseError, load_scenario
from .simulator import SimConfig, SimEstimates, SimulationDivergence, simulate
from .solver import CLOSURES, SolverError, UnstableModelError, solve_steady_state
from .stability import StabilityReport, Verdict, stability_report

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_DIVERGED = 0, 1, 2, 3
PERFORMANCE_JSON = "performance.json"
SIMULATION_JSON = "simulation.json"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def render_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[c if isinstance(c, str) else fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(obj, indent=2)
    if path is not None:
        path.write_text(text + "\n")
    return text


def _load(path: str) -> Scenario:
    try:
        sc = load_scenario(path)
    except ScenarioParseError as exc:
        raise CliError(f"parse error: {exc}") from None
    res = validate_spec(sc.spec)
    if not res.ok:
        raise CliError("invalid scenario:\n  " + "\n  ".join(res.violations))
    return sc


def _outdir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- validate -----------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.path)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    res = validate_spec(sc.spec)
    if res.ok:
        print(f"{sc.name}: valid (m={sc.spec.m}, s={sc.spec.policy.s}, S={sc.spec.policy.S})")
        return EXIT_OK
    for v in res.violations:
        print(f"{sc.name}: {v}", file=sys.stderr)
    return EXIT_USAGE


# -- stability ----------------------------------------------------------------


def stability_table(rep: StabilityReport) -> str:
    summary = render_table(
        ["quantity", "value"],
        [
            ["rho", rep.rho],
            ["D_closed", rep.D_closed],
            ["D_star (numerical)", rep.D_star],
            ["D_star (scalar-sum form)", rep.D_star_scalar_sum],
            ["verdict", rep.verdict.value],
        ],
    )
    per_state = render_table(["z", "rho_z"], [[z + 1, r] for z, r in enumerate(rep.rho_per_state)])
    text = summary + "\n\n" + per_state
    if rep.drift_signs_agree is False:
        text += (
            "\n\nWARNING: numerical drift D_star and closed-form drift D_closed have opposite signs; "
            "the verdict above follows rho."
        )
    return text


def cmd_stability(args) -> int:
    sc = _load(args.path)
    rep = stability_report(sc.spec)
    if args.format == "json":
        print(dump_json({"scenario": sc.name, **rep.to_dict()}))
    else:
        print(stability_table(rep))
    return EXIT_OK if rep.verdict is Verdict.STABLE else EXIT_UNSTABLE


# -- solve --------------------------------------------------------------------


def performance_table(rep: PerformanceReport) -> str:
    return render_table(["measure", "value"], [[k, v] for k, v in rep.table_row().items()])


def sim_table_row(sim: SimEstimates, lambda_bar: float, n_inv: int | None) -> dict[str, tuple[float, float]]:
    """Simulation estimates in the performance-table layout. Sojourn times
    follow from Little's law with the exact mean arrival rate."""
    e = sim.scalars
    out = {
        "Idle": (e["p_idle"].mean, e["p_idle"].halfwidth),
        "Busy": (e["p_busy"].mean, e["p_busy"].halfwidth),
        "Failure": (e["p_failed"].mean, e["p_failed"].halfwidth),
        "L_R": (e["L_R"].mean, e["L_R"].halfwidth),
        "L": (e["L"].mean, e["L"].halfwidth),
        "W_R": (e["L_R"].mean / lambda_bar, e["L_R"].halfwidth / lambda_bar),
        "W": (e["L"].mean / lambda_bar, e["L"].halfwidth / lambda_bar),
        "B_inv": (e["B_inv"].mean, e["B_inv"].halfwidth),
    }
    if n_inv is not None:
        out["D_S"] = (n_inv * out["W"][0], n_inv * out["W"][1])
    return out


def write_solution_files(sc: Scenario, steady, rep: PerformanceReport, out: Path) -> None:
    spec = sc.spec
    dump_json({"scenario": sc.name, "closure": steady.closure, **rep.to_dict()}, out / PERFORMANCE_JSON)
    (out / "performance.txt").write_text(performance_table(rep) + "\n")
    with (out / "orbit_marginal.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", "p_R"])
        for R, p in enumerate(rep.orbit_marginal):
            w.writerow([R, repr(float(p))])
    with (out / "inventory_marginal.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["I", "p_I"])
        for I, p in zip(spec.policy.levels, rep.inventory_marginal):
            w.writerow([I, repr(float(p))])
    x = steady.phase_tensor()
    with (out / "distribution.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", "I", "status", "Z", "probability"])
        for R in range(x.shape[0]):
            for i, I in enumerate(spec.policy.levels):
                for st in Status:
                    for z in range(spec.m):
                        w.writerow([R, I, st.label, z + 1, repr(float(x[R, i, st, z]))])


def read_performance(path: Path) -> PerformanceReport:
    data = json.loads(path.read_text())
    data.pop("scenario", None)
    data.pop("closure", None)
    return PerformanceReport.from_dict(data)


def _solve(sc: Scenario, truncation: int, closure: str):
    try:
        steady = solve_steady_state(sc.spec, truncation, closure=closure, keep_rate_matrices=False)
    except UnstableModelError as exc:
        raise CliError(f"{exc}; run the 'stability' subcommand for details", EXIT_UNSTABLE) from None
    except SolverError as exc:
        raise CliError(f"solver failed: {exc}") from None
    return steady, compute_report(steady, sc.spec)


def cmd_solve(args) -> int:
    sc = _load(args.path)
    truncation = args.truncation or sc.truncation
    steady, rep = _solve(sc, truncation, args.closure)
    out = _outdir(args)
    if out is not None:
        write_solution_files(sc, steady, rep, out)
    if args.format == "json":
        print(dump_json({"scenario": sc.name, "closure": steady.closure, **rep.to_dict()}))
    else:
        print(f"{sc.name}: truncation R* = {truncation} ({steady.closure} closure), "
              f"tail mass bound {fmt(rep.tail_mass_bound)}")
        print(performance_table(rep))
        print(f"B_inv (uniform closed form): {fmt(rep.B_inv_uniform)}")
    return EXIT_OK


# -- simulate -----------------------------------------------------------------


def _sim_config(sc: Scenario, args) -> SimConfig:
    s = sc.sim
    try:
        return SimConfig(
            horizon=args.horizon if args.horizon is not None else s.horizon,
            warmup=args.warmup if args.warmup is not None else s.warmup,
            replications=args.replications if args.replications is not None else s.replications,
            seed=args.seed if args.seed is not None else s.seed,
            orbit_cap=args.orbit_cap if args.orbit_cap is not None else s.orbit_cap,
        )
    except ValueError as exc:
        raise CliError(f"bad simulation settings: {exc}") from None


def _simulate(sc: Scenario, cfg: SimConfig, workers: int = 1) -> SimEstimates:
    try:
        return simulate(sc.spec, cfg, workers=workers)
    except SimulationDivergence as exc:
        raise CliError(f"simulation diverged: {exc}", EXIT_DIVERGED) from None


def simulation_table(sc: Scenario, est: SimEstimates) -> str:
    lambda_bar = float(sc.spec.env.lam @ env_stationary(sc.spec.env.Q))
    row = sim_table_row(est, lambda_bar, sc.spec.policy.n_levels)
    return render_table(["measure", "value", "ci_halfwidth"], [[k, v, hw] for k, (v, hw) in row.items()])


def cmd_simulate(args) -> int:
    sc = _load(args.path)
    cfg = _sim_config(sc, args)
    est = _simulate(sc, cfg, args.workers)
    out = _outdir(args)
    table = simulation_table(sc, est)
    if out is not None:
        dump_json({"scenario": sc.name, **est.to_dict()}, out / SIMULATION_JSON)
        (out / "simulation.txt").write_text(table + "\n")
        est.write_replications_csv(out / "replications.csv")
    if args.format == "json":
        print(dump_json({"scenario": sc.name, **est.to_dict()}))
    else:
        print(f"{sc.name}: {cfg.replications} replications, horizon {fmt(cfg.horizon)}, "
              f"warmup {fmt(cfg.warmup)}, seed {cfg.seed}")
        print(table)
    return EXIT_OK


def read_simulation(path: Path) -> SimEstimates:
    data = json.loads(path.read_text())
    data.pop("scenario", None)
    return SimEstimates.from_dict(data)


# -- report -------------------------------------------------------------------


COVER_ROUNDOFF = 1e-12


def compare_rows(sc: Scenario, rep: PerformanceReport, est: SimEstimates) -> list[dict]:
    sim = sim_table_row(est, rep.lambda_bar, sc.spec.policy.n_levels)
    rows = []
    for name in TABLE_COLUMNS:
        analytic = rep.table_row()[name]
        value, hw = sim[name]
        rel = (value - analytic) / abs(analytic) if analytic != 0 else (0.0 if value == 0 else float("inf"))
        rows.append(
            {
                "measure": name,
                "analytic": analytic,
                "simulated": value,
                "ci_halfwidth": hw,
                "rel_diff": rel,
                # the allowance absorbs round-off when the simulated CI has zero width
                "covered": bool(abs(value - analytic) <= hw + COVER_ROUNDOFF * max(1.0, abs(analytic))),
            }
        )
    return rows


def cmd_report(args) -> int:
    sc = _load(args.path)
    out = Path(args.out)
    perf_path, sim_path = out / PERFORMANCE_JSON, out / SIMULATION_JSON
    need = [perf_path] + ([sim_path] if args.compare else [])
    missing = [p for p in need if not p.exists()]
    if missing and not args.compute:
        names = ", ".join(str(p) for p in missing)
        raise CliError(f"missing artifact(s): {names} (run 'solve'/'simulate' with --out {out}, or pass --compute)")
    out.mkdir(parents=True, exist_ok=True)
    if perf_path.exists():
        rep = read_performance(perf_path)
    else:
        steady, rep = _solve(sc, args.truncation or sc.truncation, args.closure)
        write_solution_files(sc, steady, rep, out)
    if not args.compare:
        if args.format == "json":
            print(dump_json({"scenario": sc.name, **rep.to_dict()}))
        else:
            print(performance_table(rep))
        return EXIT_OK

    if sim_path.exists():
        est = read_simulation(sim_path)
    else:
        est = _simulate(sc, _sim_config(sc, args), args.workers)
        dump_json({"scenario": sc.name, **est.to_dict()}, sim_path)
    rows = compare_rows(sc, rep, est)
    if args.format == "json":
        print(dump_json({"scenario": sc.name, "truncation_level": rep.truncation_level, "rows": rows}))
    else:
        print(f"{sc.name}: analytic (R* = {rep.truncation_level}) vs simulation")
        print(
            render_table(
                ["measure", "analytic", "simulated", "ci_halfwidth", "rel_diff", "covered"],
                [[r["measure"], r["analytic"], r["simulated"], r["ci_halfwidth"], r["rel_diff"],
                  "yes" if r["covered"] else "no"] for r in rows],
            )
        )
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--replications", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--warmup", type=float)
    p.add_argument("--orbit-cap", dest="orbit_cap", type=int)
    p.add_argument("--workers", type=int, default=1, help="replications run concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retrial-inventory", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stability", help="traffic intensity and drift")
    p.add_argument("path")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("solve", help="truncated steady state and performance measures")
    p.add_argument("path")
    p.add_argument("--truncation", type=int, help="orbit truncation level R* (default from scenario, 75)")
    p.add_argument("--closure", choices=CLOSURES, default="reflect")
    p.add_argument("--out", help="directory for reports and CSV files")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="stochastic simulation with confidence intervals")
    p.add_argument("path")
    _add_sim_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="analytic report, optionally against simulation")
    p.add_argument("path")
    p.add_argument("--out", required=True, help="directory holding solve/simulate outputs")
    p.add_argument("--compare", action="store_true", help="side-by-side analytic vs simulated table")
    p.add_argument("--compute", action="store_true", help="produce missing artifacts on the fly")
    p.add_argument("--truncation", type=int)
    p.add_argument("--closure", choices=CLOSURES, default="reflect")
    p.add_argument("--format", choices=("table", "json"), default="table")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
