import json
import os

import pytest
import yaml

from torusgap.cli import main
from torusgap.config import config_hash, load_config, parse_config
from torusgap.errors import ConfigError


BASE_CONFIG = {
    "name": "cli-test",
    "initial_condition": {"kind": "taylor_green"},
    "solver": {"dim": 2, "n": 16, "m": 4, "dt": 5e-3, "T": 0.2},
    "analysis": {"s": 0.0, "t": 0.2},
    "sweep": {"m": [2, 4, 8]},
}


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(BASE_CONFIG))
    return str(path)


def read_json(path):
    with open(path, encoding="ascii") as fh:
        return json.load(fh)


# ----------------------------------------------------------------------
# config parsing
# ----------------------------------------------------------------------

def test_missing_field_names_the_field(tmp_path):
    raw = {"initial_condition": {"kind": "taylor_green"},
           "solver": {"dim": 2, "n": 16, "m": 4, "T": 1.0}}
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="solver.dt"):
        load_config(path)


def test_bad_functional_rejected():
    raw = dict(BASE_CONFIG)
    raw["analysis"] = {"functionals": ["G", "X"]}
    with pytest.raises(ConfigError, match="functionals"):
        parse_config(raw)


def test_solver_invariants_surface_as_config_errors(tmp_path):
    raw = {"initial_condition": {"kind": "taylor_green"},
           "solver": {"dim": 2, "n": 16, "m": 64, "dt": 1e-3, "T": 1.0}}
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="m must satisfy"):
        load_config(path)


def test_config_hash_stable_and_sensitive():
    a = parse_config(dict(BASE_CONFIG))
    b = parse_config(dict(BASE_CONFIG))
    assert config_hash(a) == config_hash(b)
    modified = dict(BASE_CONFIG)
    modified["solver"] = dict(BASE_CONFIG["solver"], dt=1e-3)
    c = parse_config(modified)
    assert config_hash(a) != config_hash(c)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def test_run_wires_artifacts_and_determinism(tmp_path, config_file):
    out1 = str(tmp_path / "r1")
    out2 = str(tmp_path / "r2")
    assert main(["run", "--config", config_file, "--out", out1]) == 0
    assert main(["run", "--config", config_file, "--out", out2]) == 0
    for name in ("run_record.json", "trajectory.csv", "ledger.json", "ledger.csv", "config.yaml"):
        assert os.path.isfile(os.path.join(out1, name))
    with open(os.path.join(out1, "trajectory.csv"), "rb") as f1, \
            open(os.path.join(out2, "trajectory.csv"), "rb") as f2:
        assert f1.read() == f2.read()
    rec1 = read_json(os.path.join(out1, "run_record.json"))
    rec2 = read_json(os.path.join(out2, "run_record.json"))
    assert rec1["config_hash"] == rec2["config_hash"]
    assert rec1["version"]
    ledger = read_json(os.path.join(out1, "ledger.json"))
    assert ledger["meta"]["config_hash"] == rec1["config_hash"]
    assert ledger["ledger"]["inequality_ok"] is True


def test_run_missing_config_exits_usage(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_sweep_and_analyze(tmp_path, config_file):
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--config", config_file, "--out", out, "--jobs", "1"]) == 0
    record = read_json(os.path.join(out, "sweep_record.json"))
    assert record["n_ok"] == 3 and record["n_failed"] == 0
    assert os.path.isfile(os.path.join(out, "gap_report.json"))

    # the parallel path writes identical trajectory bytes per ladder point
    out2 = str(tmp_path / "sweep_par")
    assert main(["sweep", "--config", config_file, "--out", out2, "--jobs", "3"]) == 0
    for m in (2, 4, 8):
        a = open(os.path.join(out, "runs", f"m{m:03d}", "trajectory.csv"), "rb").read()
        b = open(os.path.join(out2, "runs", f"m{m:03d}", "trajectory.csv"), "rb").read()
        assert a == b

    assert main(["analyze", out]) == 0
    adir = os.path.join(out, "analysis")
    for name in ("analysis_summary.json", "ledger.csv", "excursion_report.json",
                 "excursions.csv", "gap_report_G.json", "gap_report_H.json",
                 "gap_report_P.json"):
        assert os.path.isfile(os.path.join(adir, name)), name
    for svg in ("trajectory.svg", "ladder_G.svg", "ladder_H.svg", "ladder_P.svg",
                "excursions.svg"):
        content = open(os.path.join(adir, "plots", svg)).read()
        assert "<svg" in content
    gap = read_json(os.path.join(adir, "gap_report_G.json"))["gap_report"]
    assert abs(gap["limit"]) <= gap["error"] + 1e-4


def test_sweep_partial_failure_exit_code(tmp_path):
    raw = dict(BASE_CONFIG)
    raw["sweep"] = {"m": [4, 99]}  # 99 > n/2 violates the solver invariant
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(raw))
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--config", str(path), "--out", out]) == 3
    record = read_json(os.path.join(out, "sweep_record.json"))
    status = {p["m"]: p["status"] for p in record["points"]}
    assert status == {4: "ok", 99: "failed"}
    assert "m must satisfy" in [p for p in record["points"] if p["m"] == 99][0]["error"]


def test_sweep_empty_ladder_rejected(tmp_path):
    raw = dict(BASE_CONFIG)
    raw.pop("sweep")
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(raw))
    code = main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == 2


def test_analyze_missing_artifacts(tmp_path, capsys):
    assert main(["analyze", str(tmp_path)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_analyze_run_directory(tmp_path, config_file):
    out = str(tmp_path / "run")
    assert main(["run", "--config", config_file, "--out", out]) == 0
    assert main(["analyze", out, "--out", str(tmp_path / "reports")]) == 0
    summary = read_json(os.path.join(tmp_path, "reports", "analysis_summary.json"))
    assert summary["summary"]["kind"] == "run"


def test_analyze_surfaces_band_precondition(tmp_path, config_file, capsys):
    out = str(tmp_path / "run")
    assert main(["run", "--config", config_file, "--out", out]) == 0
    bad = dict(BASE_CONFIG)
    bad["analysis"] = {"s": 0.0, "t": 0.2, "r_values": [1e-9]}
    cfgpath = tmp_path / "bad_analysis.yaml"
    cfgpath.write_text(yaml.safe_dump(bad))
    code = main(["analyze", out, "--config", str(cfgpath)])
    err = capsys.readouterr().err
    assert code == 2
    assert "R0" in err  # computed threshold surfaced in the message


def test_verify_lemma_commands(tmp_path, capsys):
    assert main(["verify-lemma", "spike", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "m=" in out
    report = read_json(os.path.join(tmp_path, "lemma_report.json"))
    assert report["lemma_report"]["passed"] is True

    assert main(["verify-lemma", "negative-control"]) == 0
    assert "HYPOTHESIS VIOLATED" in capsys.readouterr().out

    assert main(["verify-lemma", "no-such-family"]) == 1
    assert "available" in capsys.readouterr().err


def test_report_command(tmp_path, config_file, capsys):
    out = str(tmp_path / "run")
    main(["run", "--config", config_file, "--out", out])
    capsys.readouterr()
    assert main(["report", out]) == 0
    assert "config_hash" in capsys.readouterr().out
    assert main(["report", str(tmp_path)]) == 1


def test_seed_override_changes_random_runs(tmp_path):
    raw = dict(BASE_CONFIG)
    raw["initial_condition"] = {"kind": "random", "seed": 1, "k_cut": 4}
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(raw))
    out1, out2, out3 = (str(tmp_path / d) for d in ("a", "b", "c"))
    main(["run", "--config", str(path), "--out", out1])
    main(["run", "--config", str(path), "--out", out2, "--seed", "1"])
    main(["run", "--config", str(path), "--out", out3, "--seed", "2"])
    data1 = open(os.path.join(out1, "trajectory.csv"), "rb").read()
    data2 = open(os.path.join(out2, "trajectory.csv"), "rb").read()
    data3 = open(os.path.join(out3, "trajectory.csv"), "rb").read()
    assert data1 == data2
    assert data1 != data3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["run"])  # --config is required
    assert exc.value.code == 1
