import json

import pytest

from ewb.cli import ConfigError, ExperimentConfig, default_schedule, main, run_experiment
from ewb.geometry import EuclideanBall, SphereCap

SMALL = {
    "space": {"kind": "euclidean", "params": {"dim": 2, "radius": 1.0}},
    "loss": {"family": "sqdist"},
    "rounds": 30,
    "n_atoms": 300,
    "seeds": [0, 1],
}


def _write(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d, indent=2))
    return p


def test_bound_command(capsys):
    assert main(["bound", "--theorem", "1", "--beta", "1", "--p", "2", "--n", "100"]) == 0
    assert capsys.readouterr().out.strip() == "11.2103"
    assert main(["bound", "--theorem", "2", "--a", "0", "--b", "1", "--p", "2", "--n", "100"]) == 0
    assert capsys.readouterr().out.strip() == "34.5862"


def test_bound_rejects_c_zero():
    assert main(["bound", "--theorem", "1", "--beta", "1", "--p", "2", "--n", "100", "--c", "0"]) == 1


def test_usage_errors_are_validation_failures():
    assert main(["bound", "--theorem", "1"]) == 1
    assert main(["run"]) == 1
    assert main(["nope"]) == 1
    assert main(["--help"]) == 0


def test_config_error_reports_line(tmp_path, capsys):
    bad = dict(SMALL, rounds=0)
    path = _write(tmp_path, bad)
    assert main(["run", "--config", str(path)]) == 1
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(path.read_text().splitlines(), 1) if '"rounds"' in s)
    assert f"{path}:{line}:" in err and "rounds" in err


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="unknown field"):
        ExperimentConfig.from_dict(dict(SMALL, colour=1))
    with pytest.raises(ConfigError, match="space kind"):
        ExperimentConfig.from_dict(dict(SMALL, space={"kind": "torus"}))
    with pytest.raises(ConfigError, match="n_atoms"):
        ExperimentConfig.from_dict(dict(SMALL, n_atoms=1))
    with pytest.raises(ConfigError, match="invalid JSON"):
        ExperimentConfig.from_json("{", "x.json")


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict(dict(SMALL, schedule={"kind": "constant", "beta": 0.125}))
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_default_schedules():
    assert default_schedule(EuclideanBall(2, 1.0), "sqdist").beta == pytest.approx(1 / 8)
    s = default_schedule(SphereCap(0.6), "dist")
    assert s.kind == "adaptive" and (s.a, s.b) == (0.0, 1.0)


def test_run_writes_artifacts(tmp_path):
    cfg = ExperimentConfig.from_dict(SMALL)
    code, summary = run_experiment(cfg, str(tmp_path / "out"))
    assert code == 0 and summary["pass"]
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert names == {"regret_seed0.csv", "regret_seed1.csv", "plot.csv", "summary.json"}
    saved = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert saved["files"] == ["regret_seed0.csv", "regret_seed1.csv", "plot.csv", "summary.json"]


def test_run_is_byte_deterministic(tmp_path):
    path = _write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["run", "--config", str(path), "--out", str(tmp_path / d)]) == 0
    for name in ("regret_seed0.csv", "regret_seed1.csv", "plot.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_and_atoms_override(tmp_path):
    path = _write(tmp_path, SMALL)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--seed", "5", "--atoms", "50"]) == 0
    assert (tmp_path / "o" / "regret_seed5.csv").exists()
    saved = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert saved["config"]["n_atoms"] == 50


def test_verify_euclidean(tmp_path, capsys):
    assert main(["verify", "--space", "euclidean", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["pass"] and "comparison_identity" in report["checks"]


def test_batch_command(tmp_path, capsys):
    code = main(["batch", "--n", "50", "--replications", "2", "--atoms", "300", "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 50 and out["pass"] and out["bound"] > 0
