import json

import pytest
from conftest import random_instance

from bs9arch import __version__
from bs9arch.cli import MANIFEST, run


def _run_json(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = run([*args, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_version(capsys):
    assert run(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_census_envelope(tmp_path):
    code, doc = _run_json(["census"], tmp_path)
    assert code == 0
    assert set(doc) == {"tool", "version", "command", "config", "result"}
    assert doc["command"] == "census"
    assert doc["result"]["cphase"] == 24


def test_census_text(capsys):
    assert run(["census", "--stored", "native", "--format", "text"]) == 0
    assert "cphase  24" in capsys.readouterr().out


def test_compile_reports_verified_sequences(tmp_path):
    code, doc = _run_json(["compile", "H", "M_X"], tmp_path)
    assert code == 0
    assert doc["result"]["H"]["verified"] is True
    assert doc["result"]["H"]["weight_p"] == pytest.approx(6)


def test_resources_lines_csv(capsys):
    assert run(["resources", "lines", "--dqds", "21", "--ratio", "30", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "dqds,ratio,lines"
    assert lines[1] == "21,30.0,6"


def test_schedule_small_circuit(tmp_path):
    circuit, layout = random_instance(3)
    cpath, lpath = tmp_path / "c.json", tmp_path / "l.json"
    circuit.dump(cpath)
    lpath.write_text(json.dumps(layout.to_dict()))
    args = ["schedule", "--circuit", str(cpath), "--layout", str(lpath), "--engine", "bnb"]
    code, doc = _run_json(args, tmp_path)
    assert code == 0
    again = _run_json(args, tmp_path, "again.json")[1]
    assert doc == again


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "--setting", "blackbox", "--p", "0.01", "--p", "0.02", "--trials", "2000", "--seed", "4"]
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run([*args, "--out", str(a)]) == 0
    assert run([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = json.loads(a.read_text())["result"]
    assert [r["p"] for r in rows] == [0.01, 0.02]


def test_threshold_command(tmp_path):
    args = ["threshold", "--setting", "blackbox", "--trials", "2000", "--tol", "0.005", "--budget", "32000"]
    code, doc = _run_json(args, tmp_path)
    assert code == 0
    assert doc["result"]["p_th"] != "NoThreshold"


def test_reproduce_table2_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["reproduce", "table2", "--out", str(a)]) == 0
    assert run(["reproduce", "table2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["result"]["match"] is True


def test_reproduce_reports_mismatch(tmp_path):
    manifest = json.loads(MANIFEST.read_text())
    manifest["table2"]["expected"]["130nm"]["no_common"] = 99
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    code, doc = _run_json(["reproduce", "table2", "--manifest", str(path)], tmp_path)
    assert code == 1 and doc["result"]["match"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["census", "--schedule", "/nonexistent.json"],
        ["census", "--layout", "/nonexistent.json"],
        ["resources", "lines", "--dqds", "3"],
        ["resources", "lines", "--dqds", "3", "--ratio", "-1"],
        ["simulate", "--setting", "blackbox", "--p", "2.0", "--trials", "10"],
        ["simulate", "--setting", "steane", "--p-idle", "-0.1", "--trials", "10"],
        ["simulate", "--setting", "bogus"],
        ["simulate", "--trials", "0"],
        ["threshold", "--setting", "blackbox", "--tol", "-1"],
    ],
)
def test_bad_input_exits_2(argv, capsys):
    assert run(argv) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    # [TRIVIAL] argparse rejects the flag before any work is done
    assert run(["census", "--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err
