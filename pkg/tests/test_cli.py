from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lced.cli import main
from lced.io import SCHEMAS, read_csv


def run(*args):
    return main([*args, "--workers", "1"] if args[0] != "seed-case" else list(args))


def test_nash_toy_b(tmp_path):
    assert run("nash", "--case", "toyB", "--out", str(tmp_path)) == 0
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["degenerate"] is True
    assert (res["refined_point"]["cost"], res["refined_point"]["emissions"]) == (3000.0, 60.0)
    assert res["carbon_price_physical"] is None
    for name in ("trace.csv", "frontier.csv"):
        assert read_csv(tmp_path / name)


def test_frontier_toy_a(tmp_path):
    assert run("frontier", "--case", "toyA", "--grid", "5", "--out", str(tmp_path)) == 0
    rows = read_csv(tmp_path / "frontier.csv")
    assert len(rows) == 5
    assert {(r["cost"], r["emissions"], r["scalarized"]) for r in rows} == {(500.0, 50.0, 1.0)}


def test_regions_toy_b(tmp_path):
    assert run("regions", "--case", "toyB", "--period", "0", "--out", str(tmp_path)) == 0
    rows = read_csv(tmp_path / "regions.csv")
    assert len(rows) == 2
    assert rows[0]["lambda_hi"] == rows[1]["lambda_lo"] == 0.5


def test_solve_writes_dispatch(tmp_path):
    assert run("solve", "--case", "toyC", "--lambda", "0.55", "--out", str(tmp_path)) == 0
    rows = read_csv(tmp_path / "dispatch.csv")
    assert {r["t"] for r in rows} == {0, 1}
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["total_cost"] == pytest.approx(sum(p["cost"] for p in res["periods"]))


def test_seeded_directory_round_trip(tmp_path):
    assert run("seed-case", "toyC", "--out", str(tmp_path / "case")) == 0
    assert run("frontier", "--case", str(tmp_path / "case"), "--exact", "--out", str(tmp_path / "a")) == 0
    assert run("frontier", "--case", "toyC", "--exact", "--out", str(tmp_path / "b")) == 0
    for name in ("frontier.csv", "breakpoints.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(read_csv(tmp_path / "a" / "breakpoints.csv")) == 4


@pytest.mark.parametrize("cmd", [
    ["nash"], ["frontier", "--exact", "--grid", "21"], ["regions", "--period", "1"], ["solve", "--lambda", "0.3"],
])
def test_byte_identical_reruns(tmp_path, cmd):
    outs = []
    for k, workers in enumerate(("1", "2")):
        out = tmp_path / f"r{k}"
        assert main([cmd[0], "--case", "toyC", "--out", str(out), "--workers", workers, *cmd[1:]]) == 0
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    assert files and files == sorted(p.name for p in outs[1].iterdir())
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        if name in SCHEMAS:
            read_csv(outs[0] / name)


def test_error_exit_codes(tmp_path, capsys):
    assert run("solve", "--case", str(tmp_path / "nope"), "--out", str(tmp_path / "o")) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "CaseError"

    case = tmp_path / "cut"
    run("seed-case", "toyC", "--out", str(case))
    (case / "load.csv").write_text("node_id,t,load_mw\n2,0,900\n")
    assert run("solve", "--case", str(case), "--out", str(tmp_path / "o")) == 2
    assert json.loads(capsys.readouterr().err)["periods"] == [0]

    assert run("nash", "--case", "toyC", "--max-iters", "1", "--out", str(tmp_path / "n")) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "NonConvergenceError"
    assert (tmp_path / "n" / "result.json").exists()

    assert run("regions", "--case", "toyC", "--period", "9", "--out", str(tmp_path / "o")) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lced", "frontier", "--case", "toyA", "--grid", "3",
                           "--out", str(tmp_path), "--workers", "1"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "frontier.csv").read_text().splitlines()[0] == "lambda,cost,emissions,scalarized"
