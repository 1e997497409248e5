import csv
import json
import os

import pytest

from normflow import cli
from normflow import experiments as ex

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_report(d):
    with open(os.path.join(d, "report.json")) as fh:
        return json.load(fh)


def test_flow_jordan_closed_form(tmp_path, capsys):
    out = str(tmp_path / "o")
    code = cli.main(["run", "--config", os.path.join(CONFIGS, "jordan_haagerup.cfg"), "--out", out])
    assert code == 0
    rep = read_report(out)
    ids = {c["id"]: c["result"] for c in rep["claims"]}
    assert ids["closed-form-2x2"] == "pass"
    assert rep["status"] == "t_end_reached"
    for name in ("trajectory.csv", "eigenvalues.csv"):
        assert os.path.exists(os.path.join(out, name))
    with open(os.path.join(out, "trajectory.csv")) as fh:
        header = next(csv.reader(fh))
    assert header[0] == "t" and header.count("t") == 1
    assert header[-1] == "energy_H" and "ndefect" in header
    assert "closed-form-2x2" in capsys.readouterr().out


def test_failing_claim_exits_2(tmp_path):
    cfg = write(tmp_path, """
experiment: flow
t_end: 1
phi: {name: haagerup, domain: auto}
initial: {kind: random, n: 3}
params: {expect_normal: true}
""")
    out = str(tmp_path / "o")
    assert cli.main(["run", "--config", cfg, "--out", out]) == 2
    rep = read_report(out)
    assert any(c["id"] == "terminal-ndefect" and c["result"] == "fail" for c in rep["claims"])


def test_unknown_experiment_is_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "experiment: teleport\n")
    assert cli.main(["run", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert "field 'experiment'" in err and "teleport" in err


def test_yaml_error_has_position(tmp_path, capsys):
    cfg = write(tmp_path, "experiment: flow\nphi: {name: haagerup\n")
    assert cli.main(["run", "--config", cfg]) == 1
    assert "line" in capsys.readouterr().err


def test_bad_ctrl_field(tmp_path, capsys):
    cfg = write(tmp_path, "experiment: flow\nctrl: {rtoll: 1}\n")
    assert cli.main(["run", "--config", cfg]) == 1
    assert "ctrl.rtoll" in capsys.readouterr().err


def test_missing_config_file(capsys):
    assert cli.main(["run", "--config", "/nonexistent/x.cfg"]) == 1
    assert "not found" in capsys.readouterr().err


def test_list_experiments(capsys):
    assert cli.main(["--list-experiments"]) == 0
    text = capsys.readouterr().out
    for name in ex.EXPERIMENTS:
        assert name in text
    assert "closed-form-2x2" in text


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 1


def test_rerun_is_deterministic(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    cfg = os.path.join(CONFIGS, "random_flow.cfg")
    assert cli.main(["run", "--config", cfg, "--out", a]) == 0
    assert cli.main(["run", "--config", cfg, "--out", b]) == 0
    for name in ("trajectory.csv", "eigenvalues.csv"):
        with open(os.path.join(a, name)) as fa, open(os.path.join(b, name)) as fb:
            assert fa.read() == fb.read()


def test_seed_override_changes_start(tmp_path):
    cfg = os.path.join(CONFIGS, "random_flow.cfg")
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    cli.main(["run", "--config", cfg, "--out", a, "--seed", "1"])
    cli.main(["run", "--config", cfg, "--out", b, "--seed", "2"])
    with open(os.path.join(a, "trajectory.csv")) as fa, open(os.path.join(b, "trajectory.csv")) as fb:
        assert fa.readlines()[1] != fb.readlines()[1]


def test_sweep_writes_summary(tmp_path):
    cfg = write(tmp_path, """
experiment: flow
t_end: 5
phi: {name: haagerup, domain: auto}
initial: {kind: random, n: 3}
""")
    out = str(tmp_path / "sw")
    code = cli.main(["sweep", "--config", cfg, "--axis", "seed", "--values", "0,1,2", "--out", out, "--jobs", "2"])
    assert code == 0
    with open(os.path.join(out, "summary.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["0", "1", "2"]
    assert {"status", "terminal_residual"} <= set(rows[0])
    assert len({r["terminal_residual"] for r in rows}) == 3


def test_sweep_bad_values(tmp_path, capsys):
    cfg = write(tmp_path, "experiment: flow\n")
    assert cli.main(["sweep", "--config", cfg, "--axis", "seed", "--values", "1,x"]) == 1


@pytest.mark.parametrize("name", ["gradient.cfg", "sawtooth.cfg", "aluthge_limit.cfg"])
def test_shipped_configs_pass(tmp_path, name):
    out = str(tmp_path / "o")
    assert cli.main(["run", "--config", os.path.join(CONFIGS, name), "--out", out]) == 0
    assert read_report(out)["status"] != "error"
