import csv
import io

import pytest

from offloadsim.cli import main
from offloadsim.metrics import CSV_HEADER
from offloadsim.topology import load_topology
from offloadsim.workload import load_trace


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_validate_defaults(capsys):
    assert main(["validate"]) == 0
    assert capsys.readouterr().out.startswith("ok: 30 nodes")


def test_validate_reports_violations(capsys):
    assert main(["validate", "--max_neighbors", "2"]) == 1
    assert "observation width too small" in capsys.readouterr().out


def test_unknown_override_is_an_error(capsys):
    assert main(["validate", "--lamda", "3"]) == 2
    assert "unknown key: lamda" in capsys.readouterr().err


def test_config_from_environment(tmp_path, monkeypatch, capsys):
    f = tmp_path / "c.yaml"
    f.write_text("topology:\n  mode: clusters\nmax_neighbors: auto\n")
    monkeypatch.setenv("OFFLOADSIM_CONFIG", str(f))
    assert main(["validate"]) == 0
    assert "12 nodes" in capsys.readouterr().out


def test_run_writes_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--policy", "least_queue", "--episodes", "2", "--horizon", "50",
                 "--out", str(out)]) == 0
    header, row = rows(out.read_text())
    assert header == list(CSV_HEADER)
    assert row[1] == "least_queue" and row[5] == "2"


def test_sweep_command(capsys):
    assert main(["sweep", "--axis", "lambda", "--values", "0.1,0.2", "--policies",
                 "local,random", "--episodes", "1", "--horizon", "30"]) == 0
    assert len(rows(capsys.readouterr().out)) == 5


def test_train_exports(tmp_path):
    args = ["train", "--episodes", "3", "--eval-episodes", "2", "--horizon", "30",
            "--topology.mode", "clusters", "--max_neighbors", "auto",
            "--table-dir", str(tmp_path / "q"), "--curve-out", str(tmp_path / "curve.csv"),
            "--out", str(tmp_path / "eval.csv")]
    assert main(args) == 0
    assert len(list((tmp_path / "q").glob("q_agent_*.csv"))) == 12
    assert len(rows((tmp_path / "curve.csv").read_text())) == 4
    assert rows((tmp_path / "eval.csv").read_text())[1][1] == "tabular_q"


def test_generators(tmp_path):
    assert main(["gen-topology", "--clusters", "2", "--out", str(tmp_path / "t.yaml")]) == 0
    assert len(load_topology(tmp_path / "t.yaml").nodes) == 23
    assert main(["gen-trace-fixture", "--jobs", "4", "--out", str(tmp_path / "j.jsonl")]) == 0
    assert len(load_trace(tmp_path / "j.jsonl")) == 4


def test_missing_config_file(capsys):
    assert main(["run", "--config", "/nonexistent.yaml"]) == 2
    assert "not found" in capsys.readouterr().err


def test_no_verb_exits_nonzero():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code != 0
