import csv
import json
import math

import numpy as np
import pytest

from staircase.cli import RunConfig, main, parse_config_file
from staircase.errors import ConfigError


def run_cli(args):
    return main(args)


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 7\nsamples = 12   # comment\n# full comment line\nmargin = 0.2\n")
    values = parse_config_file(str(cfg))
    rc = RunConfig(values)
    assert rc["seed"] == 7 and rc["samples"] == 12 and rc["margin"] == 0.2


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError):
        RunConfig({"not_a_key": "1"})
    with pytest.raises(ConfigError):
        RunConfig({"samples": "0"})
    with pytest.raises(ConfigError):
        RunConfig({"fd_h": "2.0"})


def test_zero_samples_exits_2(tmp_path):
    out = tmp_path / "r.json"
    code = run_cli(["verify", "group", "--samples", "0", "--out", str(out)])
    assert code == 2


def test_malformed_config_file_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("this line has no equals sign\n")
    assert run_cli(["verify", "group", "--config", str(cfg)]) == 2


def test_verify_group_passes_and_writes_schema(tmp_path):
    out = tmp_path / "group.json"
    code = run_cli(["verify", "group", "--seed", "5", "--samples", "50",
                    "--out", str(out)])
    assert code == 0
    payload = read_json(out)
    assert payload["schema"] == 1
    assert payload["command"] == "verify group"
    assert len(payload["reports"]) == 5
    for rep in payload["reports"]:
        assert rep["sup_residual"] >= rep["mean_residual"] >= 0.0
        assert rep["sup_residual"] <= rep["extras"]["budget"]


def test_verify_report_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(["verify", "commutators", "--seed", "11", "--samples", "20", "--out", str(a)])
    run_cli(["verify", "commutators", "--seed", "11", "--samples", "20", "--out", str(b)])
    pa, pb = read_json(a), read_json(b)
    pa.pop("timestamp")
    pb.pop("timestamp")
    assert json.dumps(pa, sort_keys=True) == json.dumps(pb, sort_keys=True)


def test_absurd_fd_step_fails_with_exit_1(tmp_path):
    cfg = tmp_path / "absurd.cfg"
    cfg.write_text("fd_h = 0.5\nsamples = 20\n")
    code = run_cli(["verify", "commutators", "--config", str(cfg),
                    "--out", str(tmp_path / "r.json")])
    assert code == 1


def test_ili_or_command(tmp_path):
    out = tmp_path / "ili.json"
    code = run_cli(["ili-or", "--samples", "16", "--out", str(out)])
    assert code == 0
    rep = read_json(out)["reports"][0]
    assert rep["sup_residual"] < 5e-3


def test_convergence_contraction_monotone(tmp_path):
    out = tmp_path / "conv.csv"
    code = run_cli(["convergence", "contraction", "--samples", "20",
                    "--seed", "3", "--out", str(out)])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["parameter", "residual"]
    vals = [float(r[1]) for r in rows[1:]]
    assert len(vals) == 4
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_convergence_ili_or_order_one(tmp_path):
    out = tmp_path / "ili.csv"
    code = run_cli(["convergence", "ili_or", "--samples", "8",
                    "--seed", "3", "--out", str(out)])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    vals = [float(r[1]) for r in rows[1:]]
    orders = [math.log2(a / b) for a, b in zip(vals, vals[1:])]
    assert all(0.7 < o < 1.3 for o in orders)


@pytest.mark.slow
def test_primitive_command_with_csv(tmp_path):
    out = tmp_path / "prim.json"
    csv_path = tmp_path / "prim.csv"
    cfg = tmp_path / "prim.cfg"
    cfg.write_text(
        "quad_nodes = 32\nline_nodes_per_unit = 8\nline_min_nodes = 16\n"
        f"csv = {csv_path}\nsamples = 6\nmargin = 0.2\n")
    code = run_cli(["primitive", "or_cup_or", "--config", str(cfg),
                    "--out", str(out)])
    assert code == 0
    payload = read_json(out)
    names = [r["identity_name"] for r in payload["reports"]]
    assert "primitive-or_cup_or-cohomological-equation" in names[0]
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [f"theta{i}" for i in range(5)] + ["p_value", "residual"]
    assert len(rows) == 7
    for row in rows[1:]:
        assert len(row) == 7
        assert float(row[6]) < 1e-6


def test_verify_contraction_and_cup_pass(tmp_path):
    assert run_cli(["verify", "contraction", "--seed", "9", "--samples", "30",
                    "--out", str(tmp_path / "c.json")]) == 0
    assert run_cli(["verify", "cup", "--seed", "9", "--samples", "30",
                    "--out", str(tmp_path / "q.json")]) == 0


def test_verify_solvers_pass(tmp_path):
    assert run_cli(["verify", "solvers", "--seed", "9", "--samples", "24",
                    "--out", str(tmp_path / "s.json")]) == 0


@pytest.mark.slow
def test_verify_all_passes(tmp_path):
    out = tmp_path / "all.json"
    code = run_cli(["verify", "all", "--seed", "4", "--samples", "24",
                    "--out", str(out)])
    assert code == 0
    payload = read_json(out)
    suites = {r["identity_name"] for r in payload["reports"]}
    assert "staircase-cohomological-equation" in suites


@pytest.mark.slow
def test_convergence_primitive_ladder(tmp_path):
    out = tmp_path / "prim_ladder.csv"
    code = run_cli(["convergence", "primitive", "--samples", "4",
                    "--seed", "2", "--out", str(out)])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    vals = [float(r[1]) for r in rows[1:]]
    assert len(vals) == 3
    assert all(v < 0.05 for v in vals)
    assert vals[0] > vals[1] > vals[2]
