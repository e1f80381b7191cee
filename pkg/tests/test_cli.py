import json

import pytest

from fracdegiorgi.cli import SCHEMA, atomic_write, run


def run_json(capsys, *argv):
    code = run(list(argv) + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None, out


def test_tail_prints_four(capsys):
    code = run(["tail", "--spec", "one", "--s", "0.25", "--p", "2"])
    out = capsys.readouterr().out
    assert code == 0 and "Tail: 4\n" in out


def test_tail_structured(capsys):
    code, doc, _ = run_json(capsys, "tail", "--spec", "one", "--s", "0.25", "--p", "2", "--R", "0.3")
    assert code == 0 and doc["schema"] == SCHEMA
    assert doc["result"]["Tail"] == pytest.approx(4.0, abs=1e-9)
    assert doc["config"]["s"] == 0.25 and doc["config"]["R"] == 0.3


def test_dg_certify_constant(capsys):
    spec = '{"family": "constant", "params": {"c": 1}, "box": {"a": -1, "b": 1}, "cells": 64, "exterior": "extend"}'
    code, doc, _ = run_json(capsys, "dg-certify", "--spec", spec)
    assert code == 0 and doc["result"]["minimal_H"] == 1.0


def test_appendix_a(capsys):
    code, doc, _ = run_json(capsys, "appendix-a", "--s", "0.25", "--p", "2", "--cells", "256", "512")
    assert code == 0
    assert doc["result"]["weak"]["verdict"] == "certified"
    assert doc["result"]["strong"]["verdict"] == "violated-trend"


def test_deterministic_output(capsys, tmp_path):
    argv = ["minimize", "--spec", '{"family": "ramp", "box": {"a": -1, "b": 1}, "cells": 32,'
            ' "exterior": {"at_infinity": 0.5}}', "--potential", "indicator", "--seed", "3", "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("s: 0.5\np: 2\nspec: one\n")
    _, doc, _ = run_json(capsys, "tail", "--config", str(cfg))
    assert doc["result"]["Tail"] == pytest.approx(2.0, abs=1e-9)
    _, doc, _ = run_json(capsys, "tail", "--config", str(cfg), "--s", "0.25")
    assert doc["result"]["Tail"] == pytest.approx(4.0, abs=1e-9)


@pytest.mark.parametrize("argv", [
    ["tail", "--spec", "missing-file.json"],
    ["tail", "--spec", "{not json"],
    ["tail", "--spec", "one", "--s", "1.5"],
    ["dg-check", "--spec", "step"],
    ["tail", "--bogus"],
    ["nonsense"],
])
def test_malformed_input_exits_2(argv, capsys):
    assert run(argv) == 2


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"zzz": 1}')
    assert run(["tail", "--spec", "one", "--config", str(cfg)]) == 2


def test_violation_exits_1(capsys):
    # an isoperimetric constant far below the observed ratio is a violation
    spec = ('{"family": "ramp", "dim": 2, "params": {"slope": 2, "intercept": 0.5, "clamp": [0, 1]},'
            ' "box": {"a": -1, "b": 1}, "cells": 24}')
    assert run(["isoperimetric", "--spec", spec, "--s", "0.8", "--C", "1e-3"]) == 1
    assert run(["isoperimetric", "--spec", spec, "--s", "0.8", "--C", "10"]) == 0


def test_strong_certificate_of_step_fails(capsys):
    assert run(["dg-certify", "--spec", "step", "--mode", "strong", "--sign", "-"]) == 1


def test_trace_written(tmp_path, capsys):
    trace = tmp_path / "pv.csv"
    assert run(["pv", "--spec", "step", "--x0", "-0.2", "--trace", str(trace)]) == 0
    assert trace.read_text().startswith("delta,truncated_integral\n")


def test_iterate_and_solve(capsys):
    code, doc, _ = run_json(capsys, "iterate", "--C", "2", "--b", "2", "--eps", "0.5")
    assert code == 0 and doc["result"]["verdict"] == "vanishes"
    code, doc, _ = run_json(capsys, "solve", "--spec", '{"family": "constant", "box": {"a": -1, "b": 1},'
                            ' "cells": 32, "exterior": {"at_infinity": 1}}', "--rhs", "constant", "--f0", "1")
    assert code == 0 and doc["result"]["ok"]


@pytest.mark.parametrize("cmd,extra", [
    ("seminorm", ["--R", "0.5"]), ("residual", []), ("bound", ["--R", "0.2"]), ("holder", []),
    ("harnack", ["--R", "0.2"]), ("growth", ["--R", "0.1"]), ("dg-check", ["--r", "0.2", "--R", "0.4",
                                                                            "--k", "0.5", "--sign", "+"]),
])
def test_probe_subcommands_run(cmd, extra, capsys):
    spec = ('{"family": "ramp", "params": {"slope": 0.25, "intercept": 0.5}, "box": {"a": -1, "b": 1},'
            ' "cells": 64, "exterior": {"at_infinity": 0.5}}')
    code, doc, _ = run_json(capsys, cmd, "--spec", spec, *extra)
    assert code in (0, 1) and doc["command"] == cmd


def test_suite_subset(capsys):
    code, doc, _ = run_json(capsys, "suite", "--only", "3", "8")
    assert code == 0 and [c["id"] for c in doc["result"]["criteria"]] == [3, 8]


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "r.txt"
    target.write_text("old")
    atomic_write(str(target), "new")
    assert target.read_text() == "new" and len(list(tmp_path.iterdir())) == 1
