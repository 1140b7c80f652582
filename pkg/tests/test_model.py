import math
from dataclasses import replace

import pytest

from conftest import make_scenario
from model import (ChannelParams, Constraints, EnergyParams, Node, NodeRole, Position3D, THERMAL_NOISE_PSD,
                   db_to_linear, dbm_to_watts, validate)


def codes(violations):
    return [v.code for v in violations]


def test_unit_helpers():
    assert db_to_linear(20.0) == pytest.approx(100.0)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert THERMAL_NOISE_PSD == pytest.approx(3.981e-21, rel=1e-3)


def test_position_distance_and_translation():
    a = Position3D(0.0, 0.0, 0.0)
    b = Position3D(3.0, 4.0, 12.0)
    assert a.distance_to(b) == pytest.approx(13.0)
    assert b.translated((1.0, -1.0, 2.0)) == Position3D(4.0, 3.0, 14.0)
    assert Position3D.from_array(b.as_array()) == b


def test_roles_airborne():
    assert NodeRole.GATHERING_UAV.airborne
    assert NodeRole.LEADER.airborne
    assert NodeRole.BACKHAUL_UAV.airborne
    assert NodeRole.CLUSTER_HEAD.terrestrial
    assert NodeRole.JAMMER.terrestrial
    assert NodeRole.BASE_STATION.terrestrial


def test_reference_defaults():
    ch = ChannelParams.reference()
    assert ch.total_bandwidth == 10e6
    assert ChannelParams.reference(narrowband=True).total_bandwidth == 10e3
    assert ch.mu_nlos == pytest.approx(100.0)
    assert EnergyParams().jammer_power == pytest.approx(1.0)
    assert Constraints() == Constraints(h_min=70.0, d_min=5.0)


def test_scenario_accessors(small_scenario):
    s = small_scenario
    assert [n.node_id for n in s.cluster_heads] == ["CH1", "CH2"]
    assert [n.node_id for n in s.uavs] == ["U1", "U2"]
    assert s.leader.node_id == "L"
    assert s.base_station is None
    assert s.jammer_positions == (Position3D(20.0, 30.0, 0.0),)
    with pytest.raises(KeyError):
        s.node("nope")


def test_with_positions_replaces_only_named_nodes(small_scenario):
    moved = small_scenario.with_positions({"U1": Position3D(1.0, 2.0, 3.0)})
    assert moved.position("U1") == Position3D(1.0, 2.0, 3.0)
    assert moved.position("U2") == small_scenario.position("U2")
    assert small_scenario.with_positions({}) is small_scenario


def test_with_nodes_and_translate(small_scenario):
    relay = Node("R1", NodeRole.BACKHAUL_UAV, Position3D(0.0, 0.0, 50.0))
    extended = small_scenario.with_nodes([relay])
    assert [n.node_id for n in extended.relays] == ["R1"]
    assert extended.with_nodes(drop_roles=[NodeRole.BACKHAUL_UAV]).relays == ()
    shifted = small_scenario.translated((10.0, 0.0, 0.0))
    assert shifted.position("CH1") == Position3D(10.0, 0.0, 0.0)


def test_valid_scenario_has_no_violations(small_scenario):
    assert validate(small_scenario, require_pairing=True) == []


def test_roster_violations(small_scenario):
    nodes = list(small_scenario.nodes)
    two_leaders = replace(small_scenario, nodes=tuple(nodes + [Node("L2", NodeRole.LEADER, Position3D(0, 0, 80))]))
    assert "multiple-leaders" in codes(validate(two_leaders))
    with pytest.raises(ValueError):
        _ = two_leaders.leader

    no_leader = small_scenario.with_nodes(drop_roles=[NodeRole.LEADER])
    assert "missing-leader" in codes(validate(no_leader))

    duplicate = replace(small_scenario, nodes=tuple(nodes + [nodes[0]]))
    assert "duplicate-id" in codes(validate(duplicate))

    unpaired = small_scenario.with_nodes(drop_roles=[NodeRole.GATHERING_UAV]).with_nodes(
        [Node("U1", NodeRole.GATHERING_UAV, Position3D(5.0, 5.0, 30.0))])
    assert "uav-ch-count-mismatch" in codes(validate(unpaired, require_pairing=True))
    assert "uav-ch-count-mismatch" not in codes(validate(unpaired))


def test_position_violations(small_scenario):
    lifted_ch = small_scenario.with_positions({"CH1": Position3D(0.0, 0.0, 1.0)})
    found = validate(lifted_ch)
    assert codes(found) == ["terrestrial-altitude"]
    assert found[0].node_id == "CH1"

    underground = small_scenario.with_positions({"U1": Position3D(0.0, 0.0, -1.0)})
    assert codes(validate(underground)) == ["negative-altitude"]

    nan_pos = small_scenario.with_positions({"U2": Position3D(math.nan, 0.0, 10.0)})
    assert codes(validate(nan_pos)) == ["non-finite-position"]


def test_parameter_violations_name_the_field():
    bad = make_scenario(constraints=Constraints(h_min=70.0, d_min=-1.0))
    found = validate(bad)
    assert [(v.code, v.field) for v in found] == [("non-positive-parameter", "constraints.d_min")]

    swapped = make_scenario(channel=ChannelParams(alpha_los=2.5, alpha_nlos=2.0))
    assert "alpha-order" in codes(validate(swapped))

    negative_jammer = make_scenario(energy=EnergyParams(jammer_power=-1.0))
    assert [v.field for v in validate(negative_jammer)] == ["energy.jammer_power"]


def test_validate_never_raises_on_empty_roster():
    found = codes(validate(make_scenario().with_nodes(drop_roles=list(NodeRole))))
    assert {"missing-leader", "missing-cluster-heads", "missing-uavs"} <= set(found)
