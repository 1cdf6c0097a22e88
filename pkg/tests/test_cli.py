from __future__ import annotations

import json

import pytest

from hyperlo.cli import EXIT_INVALID, EXIT_OK, main


def _csv_rows(text: str) -> tuple[dict, list[str], list[list[str]]]:
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        else:
            body.append(line.split(","))
    return meta, body[0], body[1:]


def test_theory_defaults_to_stdout(capsys):
    assert main(["theory", "--k", "2,3", "--tau", "5n,omega"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "constant" in out.splitlines()[0]
    assert len(out.strip().splitlines()) == 1 + 4


def test_theory_csv_carries_metadata(tmp_path):
    path = tmp_path / "t.csv"
    assert main(["theory", "--k", "2", "--tau", "100n", "--out", str(path)]) == EXIT_OK
    meta, header, rows = _csv_rows(path.read_text())
    assert meta["command"] == "theory"
    assert len(meta["spec_sha256"]) == 64
    value = float(rows[0][header.index("constant")])
    assert value == pytest.approx(0.42329, abs=5e-4)


def test_theory_opt_and_simple_mechanisms(tmp_path):
    path = tmp_path / "t.json"
    assert main(["theory", "--n", "10000", "--k", "3", "--mechanism", "opt,simple", "--out", str(path)]) == EXIT_OK
    rows = json.loads(path.read_text())["rows"]
    by_mech = {r["mechanism"]: r["constant"] for r in rows}
    assert by_mech["simple"] == pytest.approx(0.65288, abs=1e-4)
    assert by_mech["opt"] == pytest.approx(0.40525, abs=1e-4)


def test_simulate_is_byte_identical_across_runs_and_jobs(tmp_path):
    args = ["simulate", "--n", "200", "--k", "2", "--tau", "5n", "--replicates", "50", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--jobs", "3", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_writes_dat_blocks_per_group(tmp_path):
    path = tmp_path / "s.dat"
    args = ["sweep", "--n", "100,200", "--k", "2,3", "--tau", "5n", "--replicates", "20", "--out", str(path)]
    assert main(args) == EXIT_OK
    text = path.read_text()
    blocks = [b for b in text.split("\n\n")[1:] if b.strip()]
    assert len(blocks) == 2
    for block in blocks:
        data = [line for line in block.splitlines() if not line.startswith("#")]
        assert len(data) == 2


def test_fixed_target_rows_per_target(tmp_path):
    path = tmp_path / "f.csv"
    args = ["fixed-target", "--n", "300", "--k", "2", "--targets", "0.25,0.5,1.0",
            "--replicates", "30", "--out", str(path)]
    assert main(args) == EXIT_OK
    _, header, rows = _csv_rows(path.read_text())
    assert len(rows) == 2 * 3
    targets = [int(r[header.index("target")]) for r in rows]
    assert targets == [75, 150, 300] * 2


def test_config_file_is_overridden_by_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# grid\nn = 150\nk = 2\nreplicates = 10\nmechanism = simple\nseed = 1\n")
    path = tmp_path / "c.csv"
    assert main(["simulate", "--config", str(cfg), "--replicates", "12", "--out", str(path)]) == EXIT_OK
    meta, header, rows = _csv_rows(path.read_text())
    assert rows[0][header.index("replicates")] == "12"
    assert rows[0][header.index("n")] == "150"
    assert rows[0][header.index("mechanism")] == "simple"


@pytest.mark.parametrize(
    "args",
    [
        ["simulate", "--n", "0"],
        ["simulate", "--mechanism", "bogus"],
        ["simulate", "--mechanism", "greedy", "--engine", "fast", "--replicates", "2"],
        ["theory", "--tau", "abc"],
        ["fixed-target", "--targets", "0.5,20"],
        ["simulate", "--replicates", "2", "--out", "x.txt"],
    ],
)
def test_invalid_specs_exit_one(args, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(args) == EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_missing_config_file_exits_one(tmp_path):
    assert main(["theory", "--config", str(tmp_path / "nope.cfg")]) == EXIT_INVALID


def test_validate_reports_all_checks(tmp_path):
    path = tmp_path / "v.json"
    assert main(["validate", "--replicates", "300", "--out", str(path)]) == EXIT_OK
    report = json.loads(path.read_text())
    assert report["failed"] == 0
    assert all(c["passed"] for c in report["checks"])
