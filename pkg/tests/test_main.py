import csv
import json

import pytest

from main import EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_OK, main

SMALL_NODES = [
    {"id": "CH1", "role": "cluster_head", "position": [0, 0, 0]},
    {"id": "CH2", "role": "cluster_head", "position": [40, 0, 0]},
    {"id": "U1", "role": "gathering_uav", "position": [5, 5, 30]},
    {"id": "U2", "role": "gathering_uav", "position": [35, 5, 30]},
    {"id": "L", "role": "leader", "position": [20, 5, 70]},
    {"id": "J1", "role": "jammer", "position": [20, 30, 0]},
]


def run(*argv) -> int:
    return main([str(a) for a in argv])


def test_optimize_writes_outputs(base_config, write_config, tmp_path):
    out = tmp_path / "out"
    assert run("optimize", write_config(base_config), "--out", out) == EXIT_OK
    for name in ("trace.csv", "scenario.json", "summary.json", "graph.csv", "manifest.json"):
        assert (out / name).exists(), name

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["schema_version"] == "1.0"
    assert summary["mode"] == "corridor"
    assert summary["best_lifetime_s"] >= summary["initial_lifetime_s"]
    assert summary["best_lifetime_s"] >= summary["last_lifetime_s"]
    assert summary["last_lambda2"] >= summary["best_lambda2"]
    assert "final_lifetime_s" not in summary
    assert len(summary["bottleneck_edge"]) == 2
    assert summary["leader_in_corridor"]

    with open(out / "trace.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["iteration"] == "0"
    assert {r["node_id"] for r in rows} == {"U1", "U2", "U3", "U4", "U5", "L"}


def test_same_seed_is_byte_identical(base_config, write_config, tmp_path):
    path = write_config(base_config)
    for name in ("a", "b"):
        assert run("optimize", path, "--seed", 9, "--mode", "free", "--out", tmp_path / name) == EXIT_OK
    for name in ("summary.json", "trace.csv", "scenario.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_montecarlo_outputs(base_config, write_config, tmp_path):
    base_config["optimizer"]["max_iterations"] = 3
    path = write_config(base_config)
    assert run("montecarlo", path, "--trials", 10, "--out", tmp_path / "a") == EXIT_OK
    assert run("montecarlo", path, "--trials", 10, "--out", tmp_path / "b") == EXIT_OK

    lines = (tmp_path / "a" / "trials.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 11
    assert lines[0].startswith("trial,feasible,initial_lifetime,initial_lambda2,baseline_lifetime")

    aggregate = tmp_path / "a" / "aggregate.json"
    assert aggregate.read_bytes() == (tmp_path / "b" / "aggregate.json").read_bytes()
    report = json.loads(aggregate.read_text(encoding="utf-8"))
    assert report["trials"] == 10
    assert set(report["methods"]) == {"baseline", "fixed", "corridor", "free"}


def test_montecarlo_needs_two_trials(base_config, write_config, tmp_path, capsys):
    assert run("montecarlo", write_config(base_config), "--trials", 1, "--out", tmp_path) == EXIT_CONFIG
    assert "montecarlo.trials" in capsys.readouterr().err


def test_validate_gradient(base_config, write_config):
    path = write_config(base_config)
    assert run("validate-gradient", path, "--samples", 2) == EXIT_OK
    assert run("validate-gradient", path, "--samples", 0) == EXIT_CONFIG


def test_validate_gradient_with_explicit_nodes(base_config, write_config, capsys):
    base_config["scenario"]["nodes"] = SMALL_NODES
    assert run("validate-gradient", write_config(base_config), "--samples", 2) == EXIT_OK
    assert "over 2 samples" in capsys.readouterr().out


def test_backhaul(base_config, write_config, tmp_path):
    out = tmp_path / "bh"
    assert run("backhaul", write_config(base_config), "--relays", 2, "--out", out) == EXIT_OK
    with open(out / "graph.csv", encoding="utf-8", newline="") as f:
        edges = [(r["tx"], r["rx"]) for r in csv.DictReader(f)]
    assert edges == [("L", "R1"), ("R1", "R2"), ("R2", "BS")]
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["relays"] == 2
    assert summary["stage"] == "stage2-backhaul"


def test_backhaul_without_base_station(base_config, write_config, tmp_path, capsys):
    base_config["scenario"]["base_station"] = None
    assert run("backhaul", write_config(base_config), "--out", tmp_path) == EXIT_CONFIG
    assert "bs" in capsys.readouterr().err


def test_two_stage(base_config, write_config, tmp_path):
    out = tmp_path / "ts"
    assert run("two-stage", write_config(base_config), "--relays", 1, "--out", out) == EXIT_OK
    for name in ("stage1_trace.csv", "stage2_trace.csv", "scenario.json", "summary.json"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["gathering_lifetime_s"] > 0
    assert summary["stage2"]["stage"] == "stage2-backhaul"


def test_infeasible_start_exits_2(base_config, write_config, tmp_path, capsys):
    nodes = [dict(n) for n in SMALL_NODES]
    nodes[4]["position"] = [20, 5, 50]
    base_config["scenario"]["nodes"] = nodes
    assert run("optimize", write_config(base_config), "--out", tmp_path) == EXIT_CONSTRAINT
    assert "h_min" in capsys.readouterr().err


def test_validate(base_config, write_config, capsys):
    base_config["scenario"]["nodes"] = SMALL_NODES
    assert run("validate", write_config(base_config)) == EXIT_OK
    assert "OK" in capsys.readouterr().out

    bad = [dict(n) for n in SMALL_NODES]
    bad[0]["position"] = [0, 0, 5]
    base_config["scenario"]["nodes"] = bad
    assert run("validate", write_config(base_config)) == EXIT_CONFIG
    assert "terrestrial-altitude" in capsys.readouterr().out


def test_configuration_errors(base_config, write_config, tmp_path):
    assert run("optimize", tmp_path / "missing.json") == EXIT_CONFIG
    assert run("optimize", write_config(base_config), "--seed", -1) == EXIT_CONFIG
    base_config["constraints"]["d_min"] = -1
    assert run("optimize", write_config(base_config), "--out", tmp_path) == EXIT_CONFIG


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as info:
        main(["launch"])
    assert info.value.code == EXIT_CONFIG
