import csv
import json
import subprocess


def run(cli, *args):
    return subprocess.run([cli, *map(str, args)], capture_output=True, text=True)


def test_solve_g1(cli, data_dir, tmp_path):
    res = run(cli, "solve", "--game", data_dir / "g1.json", "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "report.json").read_text())
    assert abs(report["value"][0] - 0.6) <= 1e-9
    rows = list(csv.DictReader((tmp_path / "policy.csv").open()))
    assert rows[0]["executed_b"] == "1"


def test_malformed_file_writes_nothing(cli, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"states": 1, "gamma": 0.5')
    out = tmp_path / "out"
    res = run(cli, "solve", "--game", bad, "--out", out)
    assert res.returncode == 1
    assert res.stderr
    assert not out.exists()


def test_sweep_budget_exhaustion(cli, tmp_path):
    res = run(cli, "solve", "--gen", "4,2,2,1", "--tol", "1e-12", "--max-sweeps", "5",
              "--out", tmp_path)
    assert res.returncode == 2
    assert json.loads((tmp_path / "report.json").read_text())["converged"] is False


def test_conflicting_sources(cli, data_dir, tmp_path):
    res = run(cli, "solve", "--game", data_dir / "g1.json", "--gen", "1,1,1,1",
              "--out", tmp_path / "x")
    assert res.returncode == 1
    assert not (tmp_path / "x").exists()


def test_oracle_g1(cli, data_dir, tmp_path):
    res = run(cli, "oracle", "--game", data_dir / "g1.json", "--out", tmp_path)
    assert res.returncode == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc["certified"]
    assert doc["upper"] == doc["lower"] == [0.6]


def test_oracle_over_budget(cli, tmp_path):
    res = run(cli, "oracle", "--gen", "6,3,3,1", "--max-enum", "10", "--out", tmp_path)
    assert res.returncode == 2
    assert json.loads((tmp_path / "oracle.json").read_text())["certified"] is False


def test_simulate_after_solve(cli, data_dir, tmp_path):
    solve_dir = tmp_path / "solve"
    assert run(cli, "solve", "--game", data_dir / "g2.json", "--out", solve_dir).returncode == 0
    sim_dir = tmp_path / "sim"
    res = run(cli, "simulate", "--game", data_dir / "g2.json", "--policy",
              solve_dir / "report.json", "--steps", 10, "--out", sim_dir)
    assert res.returncode == 0, res.stderr
    rows = list(csv.DictReader((sim_dir / "trajectory.csv").open()))
    assert list(rows[0]) == ["t", "s", "executed_a", "executed_b", "reward",
                             "cumulative_return"]
    assert abs(float(rows[-1]["cumulative_return"]) - 2.9971) <= 1e-4
    summary = json.loads((sim_dir / "interventions.json").read_text())
    assert summary["taus"] == list(range(10))
    assert summary["rhos"] == []


def test_monte_carlo_matches_value(cli, tmp_path):
    res = run(cli, "simulate", "--gen", "4,2,2,5", "--rollouts", 1000, "--start", 2,
              "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    mc = json.loads((tmp_path / "interventions.json").read_text())["monte_carlo"]
    assert abs(mc["mean"] - mc["v_hat"]) <= 3 * mc["std_error"]


def test_budget_labels(cli, data_dir, tmp_path):
    res = run(cli, "budget", "--game", data_dir / "g2.json", "--n1", 2, "--n2", 0,
              "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["states"] == ["(0,0,0)", "(0,1,0)", "(0,2,0)"]
    assert json.loads((tmp_path / "interventions.json").read_text())["taus"] == [0, 1]


def test_learn_outputs(cli, data_dir, tmp_path):
    res = run(cli, "learn", "--game", data_dir / "g1.json", "--steps", 5000,
              "--seed", 3, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    header = (tmp_path / "diagnostics.csv").read_text().splitlines()[0]
    assert header == "step,sup_norm_delta,dist_to_qhat,epsilon,seed"
    assert "q" in json.loads((tmp_path / "q.json").read_text())


def test_fit_and_duopoly(cli, data_dir, tmp_path):
    res = run(cli, "fit", "--gen", "4,2,2,3", "--samples", 20000, "--combinator", "F",
              "--out", tmp_path / "fit")
    assert res.returncode == 0, res.stderr
    doc = json.loads((tmp_path / "fit" / "fit.json").read_text())
    assert {"r_hat", "lhs", "rhs", "holds", "samples"} <= set(doc)
    res = run(cli, "solve", "--duopoly", data_dir / "duopoly_small.json", "--out",
              tmp_path / "duo")
    assert res.returncode == 0, res.stderr
    res = run(cli, "fit", "--gen", "4,2,2,3", "--combinator", "G", "--out", tmp_path / "g")
    assert res.returncode == 1


def test_outputs_are_byte_reproducible(cli, tmp_path):
    cases = {
        "gen": [],
        "solve": [],
        "learn": ["--steps", 3000, "--seed", 9],
        "simulate": ["--rollouts", 20, "--seed", 9],
        "budget": ["--n1", 1, "--n2", 1, "--seed", 9],
        "fit": ["--samples", 5000, "--seed", 9],
    }
    for sub, extra in cases.items():
        dirs = [tmp_path / f"{sub}{i}" for i in range(2)]
        for d in dirs:
            res = run(cli, sub, "--gen", "3,2,2,7", "--out", d, *extra)
            assert res.returncode == 0, (sub, res.stderr)
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), (sub, name)
