import json

import pytest

from dnls import __version__
from dnls.cli import main

RUN_CFG = """\
experiment = run
dim = 1
sigma1 = 1
sigma2 = 1
lambda = 1
a = 1
omega = 1
half_extent = 10
points = 128
dt = 0.01
t_end = 1
record_every = 5
"""


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_classify_inline_not_covered(capsys):
    code = main(["classify", "--lambda", "-1", "--a", "0.5", "--sigma1", "1", "--sigma2", "1", "--dim", "3"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["verdict"] == "NotCoveredByTheorem"
    assert out["version"] == __version__


def test_classify_inline_missing_flag(capsys):
    assert main(["classify", "--lambda", "-1", "--a", "0.5", "--sigma1", "1", "--dim", "3"]) == 2
    assert "--sigma2" in capsys.readouterr().err


def test_classify_from_config(tmp_path, capsys):
    assert main(["classify", "--config", write(tmp_path, RUN_CFG)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "GlobalDefocusing"


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", write(tmp_path, RUN_CFG), "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["version"] == __version__
    assert rep["config"]["physics"]["lambda"] == 1
    assert rep["report"]["termination"] == "Completed"
    lines = (out / "series.csv").read_text().splitlines()
    assert lines[0].startswith("t,mass") and len(lines) == 1 + 21
    assert (out / "final.dnls").read_bytes()[:5] == b"DNLS\x01"


def test_run_deterministic(tmp_path):
    cfg = write(tmp_path, RUN_CFG)
    for d in ("a", "b"):
        main(["run", "--config", cfg, "--out", str(tmp_path / d), "--quiet"])
    for name in ("report.json", "series.csv", "final.dnls"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_invalid_config_names_key(tmp_path, capsys):
    code = main(["run", "--config", write(tmp_path, RUN_CFG.replace("points = 128", "points = 127")), "--quiet"])
    assert code == 2
    assert "points" in capsys.readouterr().err


def test_run_missing_config(capsys):
    assert main(["run", "--quiet"]) == 2
    assert "--config" in capsys.readouterr().err


def test_run_watchdog_exit(tmp_path):
    text = """\
experiment = run
dim = 1
sigma1 = 2
sigma2 = 2
lambda = -1
a = 0
half_extent = 8
points = 512
amplitude = 2
width = 0.5
dt = 0.0002
t_end = 1
record_every = 50
watchdog_factor = 10
"""
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o"), "--quiet"]) == 3


def test_experiment_precondition_exit(tmp_path, capsys):
    # confined decay without a trap
    text = RUN_CFG.replace("omega = 1", "omega = 0").replace("t_end = 1", "t_end = 50")
    assert main(["decay", "--config", write(tmp_path, text), "--out", str(tmp_path / "o"), "--quiet"]) == 2
    assert "trap" in capsys.readouterr().err


def test_torus_subcommand(tmp_path):
    text = """\
experiment = torus
dim = 1
sigma1 = 1
sigma2 = 1
lambda = 1
a = 1
topology = torus
points = 32
initial = constant
amplitude = 0.8
dt = 0.01
t_end = 5
"""
    out = tmp_path / "o"
    assert main(["torus", "--config", write(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())["report"]
    assert rep["bounds_hold"] is True
    assert (out / "series.csv").exists()


def test_check_subset(tmp_path, capsys):
    code = main(["check", "--only", "classifier_truth_table", "substep_oracle", "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.count("[PASS]") == 2
    assert json.loads((tmp_path / "check.json").read_text())["report"]["passed"] is True


def test_check_unknown_name():
    assert main(["check", "--only", "nope", "--quiet"]) == 2


def test_check_failure_exit(monkeypatch):
    from dnls import checks

    def failing():
        return checks.CheckResult("fake", False, "forced", 1.0)

    monkeypatch.setitem(checks.CHECKS, "fake", failing)
    assert main(["check", "--only", "fake", "--quiet"]) == 4


SWEEP_CFG = """\
experiment = sweep
sweep_experiment = energy
dim = 1
sigma1 = 1
sigma2 = 1
lambda = 1
a = 1
half_extent = 20
points = 128
dt = 0.01
t_end = 1
sweep.a = 0.5, 1, 2
sweep.lambda = 0.5, 1
"""


@pytest.mark.parametrize("threads", [1, 4])
def test_sweep_order_independent(tmp_path, threads):
    cfg = write(tmp_path, SWEEP_CFG)
    ref, out = tmp_path / "ref", tmp_path / "par"
    assert main(["sweep", "--config", cfg, "--out", str(ref), "--threads", "1", "--quiet"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", str(threads), "--quiet"]) == 0
    index = json.loads((out / "sweep.json").read_text())["report"]["cells"]
    assert len(index) == 6
    assert (ref / "sweep.json").read_bytes() == (out / "sweep.json").read_bytes()
    for key in index:
        assert (ref / key / "report.json").read_bytes() == (out / key / "report.json").read_bytes()
        assert (ref / key / "series.csv").read_bytes() == (out / key / "series.csv").read_bytes()


def test_sweep_requires_sweep_experiment_kind(tmp_path):
    assert main(["sweep", "--config", write(tmp_path, RUN_CFG), "--quiet"]) == 2
