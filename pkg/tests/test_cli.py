"""Experiment harness and CLI: reproducibility, formats, exit codes."""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from arcnc.cli import main
from arcnc.simulate import CSV_HEADER, run_trials, summarize, write_csv
from arcnc.topologies import TopologySpec


def sim_csv(tmp_path, name, extra):
    out = tmp_path / name
    rc = main(["sim", "--out", str(out), *extra])
    assert rc == 0
    return out.read_bytes()


def test_csv_bytes_reproducible(tmp_path):
    args = ["--topology", "combination", "--n", "6", "--m", "2", "--q", "2,4",
            "--trials", "20", "--seed", "11"]
    a = sim_csv(tmp_path, "a.csv", args)
    b = sim_csv(tmp_path, "b.csv", args)
    assert a == b
    assert a.splitlines()[0].decode() == CSV_HEADER


def test_workers_do_not_change_bytes(tmp_path):
    base = ["--topology", "sparsified", "--n", "6", "--m", "2", "--q", "2",
            "--trials", "12", "--seed", "3"]
    serial = sim_csv(tmp_path, "serial.csv", base)
    parallel = sim_csv(tmp_path, "parallel.csv", base + ["--workers", "3"])
    assert serial == parallel


def test_random_topology_rows_reproducible(tmp_path):
    args = ["--topology", "rgg-acyclic", "--nodes", "14", "--sinks", "3",
            "--radius", "0.5", "--q", "4", "--trials", "10", "--seed", "5"]
    assert sim_csv(tmp_path, "r1.csv", args) == sim_csv(tmp_path, "r2.csv", args)


def test_row_and_summary_contents():
    spec = TopologySpec("combination", {"n": 4, "m": 2})
    rows = run_trials(spec, 2, 30, master_seed=1)
    assert len(rows) == 30
    assert all(r.topology == "combination(m=2,n=4):arcnc" for r in rows)
    assert all(r.family_params == "m=2;n=4" for r in rows)
    ok = [r for r in rows if r.success]
    assert ok, "expected at least one success"
    row = ok[0]
    assert row.t_n == max(v for v in row.sink_t_r)
    assert len(row.sink_t_r) == 6
    (summary,) = summarize(rows)
    assert summary.trials == 30
    assert summary.successes == len(ok)
    assert summary.t_avg_stderr is not None and summary.t_avg_stderr >= 0.0


def test_rlnc_rows():
    spec = TopologySpec("combination", {"n": 3, "m": 2})
    rows = run_trials(spec, 16, 40, master_seed=2, mode="rlnc")
    ok = [r for r in rows if r.success]
    assert ok and all(r.w_avg == 4.0 and r.t_n == 0 for r in ok)
    bad = [r for r in rows if not r.success]
    for r in bad:
        assert r.t_n is None and r.t_avg is None and r.w_avg is None
        assert all(v is None for v in r.sink_t_r)


def test_failure_rows_serialize(tmp_path):
    spec = TopologySpec("shuttle")
    rows = run_trials(spec, 2, 5, master_seed=1, t_max=0)
    assert all(not r.success for r in rows)
    path = tmp_path / "fail.csv"
    write_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    fields = lines[1].split(",", 8)
    assert fields[4] == "0" and fields[5] == "" and fields[6] == ""
    assert json.loads(lines[1].split('"')[1]) == [None, None]


def test_bounds_cli(capsys):
    assert main(["bounds", "et", "--m", "2", "--q", "2"]) == 0
    out = capsys.readouterr().out
    assert "1.66667" in out and "0.6" in out
    assert main(["bounds", "rlnc-q", "--d", "120", "--j", "1", "--target", "0.99"]) == 0
    assert "32768" in capsys.readouterr().out
    assert main(["bounds", "umbrella", "--alpha", "29", "--beta", "3", "--q", "4",
                 "--epsilon", "0.01"]) == 0
    out = capsys.readouterr().out
    assert "umbrella_gain_lb" in out
    assert main(["bounds", "et", "--m", "0", "--q", "2"]) == 2
    assert main(["bounds", "rlnc-q", "--d", "5", "--target", "0.9"]) == 2


def test_graph_cli(tmp_path, capsys):
    assert main(["graph", "--topology", "shuttle"]) == 0
    dot = capsys.readouterr().out
    assert dot.count("->") == 10 and '"e10"' in dot
    out = tmp_path / "umbrella.dot"
    assert main(["graph", "--topology", "umbrella", "--alpha", "9", "--beta", "3",
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert text.count("[label=") >= 31
    assert main(["graph", "--topology", "combination", "--n", "4", "--m", "2"]) == 0
    assert capsys.readouterr().out.count("doublecircle") == 6


def test_config_file_and_env_seed(tmp_path, capsys, monkeypatch):
    conf = tmp_path / "run.conf"
    conf.write_text(
        "family=combination\nn=4\nm=2\nq=2\ntrials=8\nseed=9\n"
    )
    out = tmp_path / "conf.csv"
    assert main(["sim", "--config", str(conf), "--out", str(out)]) == 0
    first = out.read_bytes()
    # explicit flags win over the config
    assert main(["sim", "--config", str(conf), "--out", str(out), "--trials", "4"]) == 0
    assert out.read_text().count("\n") == 1 + 4

    # the environment seed overrides both
    monkeypatch.setenv("ARCNC_SEED", "9")
    assert main(["sim", "--config", str(conf), "--out", str(out), "--seed", "1"]) == 0
    assert out.read_bytes() == first

    bad = tmp_path / "bad.conf"
    bad.write_text("family=combination\nwat=1\n")
    assert main(["sim", "--config", str(bad)]) == 2


def test_exit_codes(tmp_path):
    assert main(["sim", "--topology", "nonesuch", "--q", "2", "--trials", "1"]) == 2
    assert main(["sim", "--topology", "combination", "--m", "2", "--q", "2"]) == 2  # missing --n
    assert main(["sim", "--topology", "combination", "--n", "4", "--m", "2",
                 "--q", "6", "--trials", "1"]) == 2
    # every shuttle trial fails at t_max=0, tripping the failure-rate gate
    rc = main(["sim", "--topology", "shuttle", "--q", "2", "--trials", "5",
               "--t-max", "0", "--max-fail-rate", "0.5"])
    assert rc == 3


def test_repro_preset(tmp_path):
    rc = main(["repro", "sparsified-flatness", "--trials", "3", "--seed", "2",
               "--out-dir", str(tmp_path), "--no-validate"])
    assert rc == 0
    data = (tmp_path / "sparsified-flatness.csv").read_text().splitlines()
    assert data[0] == CSV_HEADER
    assert len(data) == 1 + 4 * 3  # four n values, three trials each
    bounds = (tmp_path / "sparsified-flatness-bounds.csv").read_text()
    assert "sink_l_ub" in bounds
    assert main(["repro", "no-such-figure", "--out-dir", str(tmp_path)]) == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "arcnc.cli", "bounds", "et", "--m", "2", "--q", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "et_ub" in proc.stdout
