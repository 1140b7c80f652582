"""Shared pytest fixtures."""

import copy
import json
from pathlib import Path

import pytest

from harness import generate_scenario, reference_generator
from model import Node, NodeRole, Position3D, Scenario

CONFIG_PATH = Path(__file__).parent / "config.json"


def make_scenario(jammers: bool = True, base_station: Position3D | None = None, **params) -> Scenario:
    """Two clusters, two UAVs, the leader and (optionally) one jammer."""
    nodes = [
        Node("CH1", NodeRole.CLUSTER_HEAD, Position3D(0.0, 0.0, 0.0)),
        Node("CH2", NodeRole.CLUSTER_HEAD, Position3D(40.0, 0.0, 0.0)),
        Node("U1", NodeRole.GATHERING_UAV, Position3D(5.0, 5.0, 30.0)),
        Node("U2", NodeRole.GATHERING_UAV, Position3D(35.0, 5.0, 30.0)),
        Node("L", NodeRole.LEADER, Position3D(20.0, 5.0, 70.0)),
    ]
    if jammers:
        nodes.append(Node("J1", NodeRole.JAMMER, Position3D(20.0, 30.0, 0.0)))
    if base_station is not None:
        nodes.append(Node("BS", NodeRole.BASE_STATION, base_station))
    return Scenario(nodes=tuple(nodes), **params)


@pytest.fixture
def small_scenario() -> Scenario:
    return make_scenario()


@pytest.fixture
def quiet_scenario() -> Scenario:
    """Same layout without jammers."""
    return make_scenario(jammers=False)


@pytest.fixture
def reference_scenario() -> Scenario:
    return generate_scenario(reference_generator(seed=1))


@pytest.fixture
def base_config() -> dict:
    """The shipped config.json, made fast and console-quiet for tests."""
    with open(CONFIG_PATH, "r", encoding="utf-8") as f:
        data = json.load(f)
    data["optimizer"]["max_iterations"] = 15
    data["gradient_check"]["samples"] = 3
    data["montecarlo"]["trials"] = 4
    data["logging"] = {"level": "WARNING", "file": None}
    return data


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to tmp_path and return its path."""
    def _write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            json.dump(copy.deepcopy(data), f, indent=2)
        return path
    return _write
