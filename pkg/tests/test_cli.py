import json
import subprocess
import sys

import numpy as np
import pytest

from retrial_inventory.cli import main, read_performance, read_simulation
from retrial_inventory.scenario import Scenario, dump_scenario, load_scenario, parse_scenario, ScenarioParseError

SIM_FLAGS = ["--horizon", "2000", "--warmup", "100", "--replications", "3"]


def write_variant(tmp_path, name, **rates):
    sc = load_scenario("low_traffic")
    sc = Scenario(spec=sc.spec.with_env(**rates), name=name, truncation=sc.truncation, sim=sc.sim)
    path = tmp_path / f"{name}.yaml"
    path.write_text(dump_scenario(sc))
    return path


@pytest.fixture(scope="module")
def solved_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("low")
    assert main(["solve", "low_traffic", "--out", str(out)]) == 0
    return out


def test_validate_bundled(capsys):
    assert main(["validate", "low_traffic"]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_lambda_mismatch(tmp_path, capsys):
    text = load_scenario("low_traffic").source
    doc = open(text).read().replace("m: 7", "m: 6")
    path = tmp_path / "bad.yaml"
    path.write_text(doc)
    assert main(["validate", str(path)]) != 0
    assert "lambda length mismatch" in capsys.readouterr().err


def test_validate_bad_row_sum(tmp_path, capsys):
    Q = np.array(load_scenario("low_traffic").spec.env.Q)
    Q[0, 0] += 0.5
    path = write_variant(tmp_path, "rowsum", Q=Q)
    assert main(["validate", str(path)]) != 0
    assert "generator row sum nonzero" in capsys.readouterr().err


def test_parse_error_has_line(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("m: 2\nlambda: [1, 2\nmu: [1, 2]\n")
    assert main(["validate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "parse error" in err and "broken.yaml:" in err


def test_scenario_text_round_trip():
    sc = load_scenario("high_traffic")
    again = parse_scenario(dump_scenario(sc))
    assert again.spec == sc.spec and again.sim == sc.sim and again.truncation == sc.truncation
    with pytest.raises(ScenarioParseError):
        parse_scenario("- just a list")


def test_stability_low_json(capsys):
    assert main(["stability", "low_traffic", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["rho"] == pytest.approx(0.4546, abs=5e-5)
    assert data["verdict"] == "stable"


def test_stability_high_table(capsys):
    assert main(["stability", "high_traffic"]) == 0
    out = capsys.readouterr().out
    assert "0.404131" in out and "51.3333" in out


def test_stability_unstable_exit(tmp_path):
    path = write_variant(tmp_path, "hot", lam=10 * load_scenario("low_traffic").spec.env.lam)
    assert main(["stability", str(path)]) == 2
    assert main(["solve", str(path)]) == 2


def test_solve_outputs(solved_dir):
    names = {p.name for p in solved_dir.iterdir()}
    assert {"performance.json", "performance.txt", "orbit_marginal.csv", "inventory_marginal.csv", "distribution.csv"} <= names
    rep = read_performance(solved_dir / "performance.json")
    assert rep.L_R == pytest.approx(7.1310, rel=1e-4)
    orbit = np.loadtxt(solved_dir / "orbit_marginal.csv", delimiter=",", skiprows=1)
    assert orbit.shape == (76, 2)
    np.testing.assert_allclose(orbit[:, 1], rep.orbit_marginal)
    assert (solved_dir / "orbit_marginal.csv").read_text().startswith("R,p_R\n")


def test_solve_json_round_trip(capsys, solved_dir):
    assert main(["solve", "low_traffic", "--format", "json", "--truncation", "40"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["truncation_level"] == 40
    # machine-readable file parses back to an equal report
    rep = read_performance(solved_dir / "performance.json")
    from retrial_inventory.measures import PerformanceReport

    assert PerformanceReport.from_dict(rep.to_dict()) == rep


def test_simulate_deterministic_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "low_traffic", *SIM_FLAGS, "--out", str(a)]) == 0
    assert main(["simulate", "low_traffic", *SIM_FLAGS, "--out", str(b)]) == 0
    for name in ("simulation.json", "simulation.txt", "replications.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    est = read_simulation(a / "simulation.json")
    assert est.config.replications == 3


def test_simulate_divergence_exit(tmp_path):
    path = write_variant(tmp_path, "hot", lam=10 * load_scenario("low_traffic").spec.env.lam)
    assert main(["simulate", str(path), "--replications", "1", "--orbit-cap", "200"]) == 3


def test_report_missing_artifacts(tmp_path, capsys):
    assert main(["report", "low_traffic", "--out", str(tmp_path), "--compare"]) == 1
    err = capsys.readouterr().err
    assert "performance.json" in err and "simulation.json" in err


def test_report_compare(solved_dir, capsys):
    assert main(["simulate", "low_traffic", *SIM_FLAGS, "--out", str(solved_dir)]) == 0
    capsys.readouterr()
    assert main(["report", "low_traffic", "--out", str(solved_dir), "--compare", "--format", "json"]) == 0
    rows = {r["measure"]: r for r in json.loads(capsys.readouterr().out)["rows"]}
    assert set(rows) >= {"Busy", "L_R", "B_inv", "D_S"}
    r = rows["L_R"]
    assert r["rel_diff"] == pytest.approx((r["simulated"] - r["analytic"]) / r["analytic"])


def test_report_no_failures(tmp_path, capsys):
    path = write_variant(tmp_path, "nofail", xi=np.zeros(7))
    out = tmp_path / "out"
    assert main(["report", str(path), "--out", str(out), "--compare", "--compute", "--truncation", "40",
                 *SIM_FLAGS, "--format", "json"]) == 0
    rows = {r["measure"]: r for r in json.loads(capsys.readouterr().out)["rows"]}
    assert rows["Failure"]["analytic"] == pytest.approx(0.0, abs=1e-12)
    assert rows["Failure"]["simulated"] == 0.0
    assert rows["Failure"]["covered"]


def test_usage_error():
    assert main(["solve"]) == 1
    assert main(["bogus"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "retrial_inventory", "validate", "high_traffic"], capture_output=True, text=True)
    assert proc.returncode == 0
