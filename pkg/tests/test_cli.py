import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from monodnf.cli import main
from monodnf.data import load_csv

SMALL = {
    "simulate": [],
    "fit-single": ["--chains", "2", "--iters", "300", "--burnin", "100", "--set", "prior.theta=3"],
    "anneal": ["--steps", "300", "--restarts", "3", "--theta", "3", "--p-geom", "0.5"],
    "rjmcmc": ["--iters", "2000", "--set", "data.simulate.p=5", "--set", "data.simulate.term_sizes=[2]"],
    "crossval": ["--steps", "200", "--restarts", "2", "--repetitions", "2",
                 "--set", "crossval.thetas=[3]", "--set", "crossval.p_geoms=[0.5]"],
}
SIM = ["--set", "data.simulate={n: 120, p: 12}"]


def artifacts(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "run.log"}


def run(cmd, out, *extra):
    return main([cmd, "-o", str(out), "--seed", "7", *SIM, *SMALL[cmd], *extra])


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    assert "usage" in capsys.readouterr().out
    for cmd in SMALL:
        with pytest.raises(SystemExit) as e:
            main([cmd, "--help"])
        assert e.value.code == 0


def test_unknown_flag_exits_two(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["anneal", "--bogus", "-o", str(tmp_path)])
    assert e.value.code == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "monodnf.cli", "simulate", "-o", str(tmp_path / "s"),
                        "--set", "data.simulate.n=10", "--set", "data.simulate.p=4"], capture_output=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "monodnf.cli", "frobnicate"], capture_output=True)
    assert r.returncode == 2


@pytest.mark.parametrize("bad", [
    ["--set", "data.simulate.n=0"],
    ["--set", "data.simulate.term_sizes=[60, 60]"],
    ["--set", "data.simulate.pi1=1.5"],
    ["--set", "nonsense.key=1"],
    ["--set", "noequals"],
    ["--seed", "-1"],
])
def test_invalid_simulate_spec_exits_two_without_output(tmp_path, bad):
    out = tmp_path / "o"
    assert main(["simulate", "-o", str(out), *bad]) == 2
    assert not out.exists()


def test_config_errors(tmp_path):
    out = tmp_path / "o"
    assert main(["anneal", "-o", str(out)]) == 2  # no data source
    assert main(["anneal", "-o", str(out), "--csv", str(tmp_path / "missing.csv")]) == 2
    cfg = tmp_path / "c.yaml"
    cfg.write_text("anneal: {steps: 10, colour: red}\n")
    assert main(["anneal", "-o", str(out), "-c", str(cfg), *SIM]) == 2
    cfg.write_text("- a list\n")
    assert main(["anneal", "-o", str(out), "-c", str(cfg)]) == 2
    assert main(["anneal", "-o", str(out), *SIM, "--set", "anneal.move_weights=[1, 1]"]) == 2
    assert main(["rjmcmc", "-o", str(out), "--set", "data.simulate.p=20"]) == 2
    assert main(["rjmcmc", "-o", str(out), "--set", "data.simulate={n: 50}"]) == 2  # default p = 100
    assert not out.exists()


def test_simulate_writes_n_rows(tmp_path):
    assert run("simulate", tmp_path) == 0
    d = load_csv(tmp_path / "data.csv")
    assert (d.n, d.p) == (120, 12)
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["terms"] == [[0, 1], [2, 3]] and truth["seed"] == 7
    cfg = yaml.safe_load((tmp_path / "config.yaml").read_text())
    assert cfg["seed"] == 7 and cfg["data"]["simulate"]["n"] == 120 and "output" not in cfg


@pytest.mark.parametrize("cmd", list(SMALL))
def test_rerun_is_byte_identical(tmp_path, cmd):
    assert run(cmd, tmp_path / "a") == 0
    assert run(cmd, tmp_path / "b", "--jobs", "2") == 0
    a, b = artifacts(tmp_path / "a"), artifacts(tmp_path / "b")
    # jobs is recorded in the config copy; everything else must match
    assert set(a) == set(b)
    assert {k for k in a if a[k] != b[k]} <= {"config.yaml"}
    assert (tmp_path / "a" / "run.log").exists()
    assert "config.yaml" in a and (tmp_path / "a" / "traces").is_dir()
    for name in a:
        if name.endswith(".json"):
            json.loads(a[name])


def test_layout_per_command(tmp_path):
    run("anneal", tmp_path / "an")
    files = set(artifacts(tmp_path / "an"))
    assert {"model.json", "rules.txt", "report.csv", "traces/restart0.csv", "traces/restart2.csv"} <= files
    model = json.loads((tmp_path / "an" / "model.json").read_text())
    assert set(model) >= {"terms", "pi0", "pi1", "logpost", "rule", "truth"}
    run("fit-single", tmp_path / "fs")
    assert {"inclusion.csv", "model.json", "traces/chain1.csv"} <= set(artifacts(tmp_path / "fs"))
    run("rjmcmc", tmp_path / "rj")
    assert {"traces/rj.csv", "report.csv", "model.json"} <= set(artifacts(tmp_path / "rj"))
    run("crossval", tmp_path / "cv")
    assert {"report.csv", "reps.csv", "rules.txt", "model.json"} <= set(artifacts(tmp_path / "cv"))


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 3\ndata:\n  simulate: {n: 50, p: 6, term_sizes: [2]}\n")
    assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "o"), "--seed", "4"]) == 0
    resolved = yaml.safe_load((tmp_path / "o" / "config.yaml").read_text())
    assert resolved["seed"] == 4 and resolved["data"]["simulate"]["seed"] == 4
    assert load_csv(tmp_path / "o" / "data.csv").n == 50


def test_csv_input_round_trip(tmp_path):
    run("simulate", tmp_path / "s")
    assert main(["anneal", "-o", str(tmp_path / "a"), "--csv", str(tmp_path / "s" / "data.csv"),
                 "--steps", "200", "--restarts", "2", "--theta", "3", "--p-geom", "0.5"]) == 0
    model = json.loads((tmp_path / "a" / "model.json").read_text())
    assert "truth" not in model and model["terms"]
