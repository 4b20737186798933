import json

import pytest

from csslab.cli import main
from csslab.manifest import PRESETS, ExperimentManifest, preset
from csslab.errors import ContractViolation


def test_manifest_round_trip():
    for name in PRESETS:
        m = ExperimentManifest.from_dict(preset(name))
        again = ExperimentManifest.from_json(m.to_json())
        assert again.to_json() == m.to_json()


def test_manifest_field_errors():
    with pytest.raises(ContractViolation, match="config.dt"):
        ExperimentManifest("simulate", {"p": 5, "dt": "x", "t_end": 1})
    with pytest.raises(ContractViolation, match="unknown field"):
        ExperimentManifest("simulate", {"p": 5, "dt": 0.01, "t_end": 1, "bogus": 1})
    with pytest.raises(ContractViolation, match="empty"):
        ExperimentManifest.from_json("   ")


def test_empty_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "usage error" in capsys.readouterr().err


def test_bad_values_are_usage_errors(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--p", "2", "--out", str(out)]) == 2
    assert main(["simulate", "--dt", "0.5", "--out", str(out)]) == 2
    assert main(["simulate", "--preset", "nope", "--out", str(out)]) == 2
    assert main(["simulate", "--preset", "groundstate", "--out", str(out)]) == 2
    assert not out.exists()


def test_simulate_outputs_and_determinism(tmp_path):
    args = ["simulate", "--preset", "free-gaussian", "--n", "512", "--rmax", "32", "--t-end", "0.2"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    for name in ("trajectory.csv", "grad_norm.csv", "run.json"):
        assert (a / name).read_text() == (b / name).read_text()
    ma, mb = (json.loads((x / "manifest.json").read_text()) for x in (a, b))
    assert ma.pop("out") != mb.pop("out") and ma == mb
    m = json.loads((a / "manifest.json").read_text())
    assert m["config"]["n"] == 512 and m["versions"]["config_sha256"]
    assert json.loads((a / "run.json").read_text())["termination"] == "completed"


def test_config_file_run(tmp_path):
    d = preset("kminus")
    d["config"].update({"n": 2048, "r_max": 8.0, "t_end": 1.0})
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps(d))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_unmet_expectation_exit_code(tmp_path):
    d = preset("kminus")
    d["config"].update({"n": 1024, "r_max": 8.0, "t_end": 0.01, "initial": {"amplitude": 0.1}})
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps(d))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4


def test_inequalities_subcommand(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"kind": "inequalities",
                               "config": {"n_fields": 3, "n": 1024, "r_max": 32.0,
                                          "cases": [{"name": "Strauss"}]}}))
    out = tmp_path / "o"
    assert main(["inequalities", "--config", str(cfg), "--out", str(out)]) == 0
    rows = json.loads((out / "inequalities.json").read_text())
    assert rows[0]["violations"] == 0
