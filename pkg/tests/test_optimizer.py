import itertools
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_scenario
from errors import ConstraintError
from harness import baseline_placement, generate_scenario, reference_generator
from lifetime_graph import bottleneck_edge, build_backhaul_graph, build_graph, network_lifetime
from model import Constraints, Node, NodeRole, Position3D
from optimizer import (LeaderMode, OptimizerConfig, constraint_violations, initial_relays, optimize_stage1,
                       optimize_stage2_backhaul, optimize_two_stage, project_constraints)

FAST = OptimizerConfig(max_iterations=40)
SLACK = 1e-12


def assert_feasible(scenario, mode, tol=1e-6):
    c = scenario.constraints
    for group in (scenario.uavs, scenario.relays):
        for a, b in itertools.combinations(group, 2):
            assert a.position.distance_to(b.position) >= c.d_min - tol
        assert all(u.position.z >= -tol for u in group)
    if mode is not LeaderMode.FREE:
        assert scenario.leader.position.z >= c.h_min - tol


def assert_monotone(trace):
    series = trace.lambda2_series()
    assert all(b >= a - SLACK for a, b in zip(series, series[1:]))


# ---------------------------------------------------------------------- #
# Projection
# ---------------------------------------------------------------------- #

def test_projection_is_identity_when_feasible():
    positions = {"U1": Position3D(0, 0, 10), "U2": Position3D(10, 0, 10), "L": Position3D(5, 0, 80)}
    result = project_constraints(positions, Constraints(), LeaderMode.CORRIDOR, "L")
    assert result.positions == positions
    assert result.events == ()
    assert result.converged


def test_corridor_clamps_leader():
    result = project_constraints({"L": Position3D(1, 2, 50)}, Constraints(h_min=70), LeaderMode.CORRIDOR, "L")
    assert result.positions["L"] == Position3D(1, 2, 70)
    assert "leader-corridor-clamp" in result.events


def test_fixed_leader_is_untouched_and_free_leader_stays_above_ground():
    low = {"L": Position3D(1, 2, 50)}
    assert project_constraints(low, Constraints(), LeaderMode.FIXED, "L").positions == low
    assert project_constraints(low, Constraints(), LeaderMode.FREE, "L").positions == low
    under = {"L": Position3D(1, 2, -3)}
    assert project_constraints(under, Constraints(), LeaderMode.FREE, "L").positions["L"] == Position3D(1, 2, 0)


def test_symmetric_separation_push():
    result = project_constraints({"U1": Position3D(0, 0, 10), "U2": Position3D(3, 0, 10)},
                                 Constraints(d_min=5.0), LeaderMode.FIXED)
    assert result.positions["U1"] == Position3D(-1, 0, 10)
    assert result.positions["U2"] == Position3D(4, 0, 10)
    assert result.events == ("separation",)


def test_coincident_uavs_are_separated_reproducibly():
    stacked = {"U1": Position3D(5, 5, 20), "U2": Position3D(5, 5, 20)}
    first = project_constraints(stacked, Constraints(d_min=5.0), LeaderMode.FIXED,
                                rng=np.random.default_rng(3))
    second = project_constraints(stacked, Constraints(d_min=5.0), LeaderMode.FIXED,
                                 rng=np.random.default_rng(3))
    assert first.positions == second.positions
    assert first.positions["U1"].distance_to(first.positions["U2"]) == pytest.approx(5.0)


def test_altitude_clamp():
    result = project_constraints({"U1": Position3D(0, 0, -1), "U2": Position3D(10, 0, 1)},
                                 Constraints(d_min=5.0), LeaderMode.FIXED)
    assert result.positions["U1"] == Position3D(0, 0, 0)
    assert result.events == ("altitude-clamp",)


def test_crowded_uavs_converge():
    crowd = {f"U{i}": Position3D(float(i), 0, 10) for i in range(3)}
    result = project_constraints(crowd, Constraints(d_min=5.0), LeaderMode.FIXED)
    assert result.converged
    assert constraint_violations(result.positions, Constraints(d_min=5.0), LeaderMode.FIXED) == []


def test_nonconvergence_is_flagged():
    crowd = {f"U{i}": Position3D(0.01 * i, 0, 0) for i in range(8)}
    result = project_constraints(crowd, Constraints(d_min=5.0), LeaderMode.FIXED, max_sweeps=1)
    assert not result.converged
    assert result.events[-1] == "projection-nonconverged"


# ---------------------------------------------------------------------- #
# Stage 1
# ---------------------------------------------------------------------- #

def test_zero_iteration_run_returns_input(small_scenario):
    final, trace = optimize_stage1(small_scenario, LeaderMode.CORRIDOR, OptimizerConfig(max_iterations=0))
    assert final == small_scenario
    assert trace.iterations == 0
    assert trace.hit_max_iterations


def test_fixed_mode_keeps_leader_bit_identical(small_scenario):
    final, trace = optimize_stage1(small_scenario, LeaderMode.FIXED, FAST)
    assert final.leader.position == small_scenario.leader.position
    assert "L" not in trace.initial.positions
    assert trace.iterations > 0


@pytest.mark.parametrize("mode", list(LeaderMode))
def test_stage1_improves_and_stays_feasible(small_scenario, mode):
    final, trace = optimize_stage1(small_scenario, mode, FAST)
    assert_monotone(trace)
    assert_feasible(final, mode)
    assert trace.best.lifetime >= trace.initial.lifetime
    assert trace.final.lambda2 >= trace.initial.lambda2
    assert final.position("CH1") == small_scenario.position("CH1")
    assert final.position("J1") == small_scenario.position("J1")


def test_trace_names_the_bottleneck_of_the_returned_placement(small_scenario):
    final, trace = optimize_stage1(small_scenario, LeaderMode.CORRIDOR, FAST)
    weakest = bottleneck_edge(build_graph(final))
    assert trace.bottleneck == (weakest.tx, weakest.rx)
    assert weakest.weight == pytest.approx(trace.best.lifetime, rel=1e-12)


def test_infeasible_start_is_rejected(small_scenario):
    low_leader = small_scenario.with_positions({"L": Position3D(20, 5, 50)})
    with pytest.raises(ConstraintError, match="h_min"):
        optimize_stage1(low_leader, LeaderMode.CORRIDOR, FAST)
    optimize_stage1(low_leader, LeaderMode.FREE, OptimizerConfig(max_iterations=2))

    crowded = small_scenario.with_positions({"U2": Position3D(6, 5, 30)})
    with pytest.raises(ConstraintError, match="d_min"):
        optimize_stage1(crowded, LeaderMode.FIXED, FAST)


def test_stage1_is_deterministic(reference_scenario):
    runs = [optimize_stage1(reference_scenario, LeaderMode.CORRIDOR, FAST) for _ in range(2)]
    (s1, t1), (s2, t2) = runs
    assert s1 == s2
    assert t1.lambda2_series() == t2.lambda2_series()
    assert [r.positions for r in t1.records] == [r.positions for r in t2.records]


@pytest.mark.parametrize("seed", range(3))
def test_reference_lifetime_never_drops(seed):
    scenario = generate_scenario(reference_generator(seed=seed))
    final, trace = optimize_stage1(scenario, LeaderMode.CORRIDOR, FAST)
    assert network_lifetime_of(final) >= trace.initial.lifetime
    assert_monotone(trace)
    assert_feasible(final, LeaderMode.CORRIDOR)


def network_lifetime_of(scenario):
    return network_lifetime(build_graph(scenario))


@pytest.mark.slow
def test_reference_acceptance_100_seeds():
    for child in np.random.SeedSequence(99).spawn(100):
        scenario = baseline_placement(generate_scenario(reference_generator(seed=child)))
        for mode in LeaderMode:
            final, trace = optimize_stage1(scenario, mode, OptimizerConfig())
            assert_monotone(trace)
            assert_feasible(final, mode)
            assert trace.best.lifetime >= trace.initial.lifetime


# ---------------------------------------------------------------------- #
# Stage 2
# ---------------------------------------------------------------------- #

def backhaul_scenario(jammers=True):
    return make_scenario(jammers=jammers, base_station=Position3D(120.0, 5.0, 0.0))


def test_initial_relays_are_evenly_spaced():
    relays = initial_relays(Position3D(0, 0, 60), Position3D(90, 0, 0), 2)
    assert [r.node_id for r in relays] == ["R1", "R2"]
    np.testing.assert_allclose(relays[0].position.as_array(), [30, 0, 40])
    np.testing.assert_allclose(relays[1].position.as_array(), [60, 0, 20])
    assert all(r.role is NodeRole.BACKHAUL_UAV for r in relays)


def test_direct_link_without_relays():
    final, trace = optimize_stage2_backhaul(backhaul_scenario(), 0, FAST)
    assert trace.stop_reason == "no-movable"
    assert trace.iterations == 0
    graph = build_backhaul_graph(final)
    assert len(graph.edges) == 1
    assert trace.initial.lifetime == network_lifetime(graph)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_relay_chain(k):
    final, trace = optimize_stage2_backhaul(backhaul_scenario(), k, FAST)
    assert len(build_backhaul_graph(final).edges) == k + 1
    assert set(trace.initial.positions) == {f"R{i}" for i in range(1, k + 1)}
    assert final.leader.position == backhaul_scenario().leader.position
    assert_monotone(trace)
    assert_feasible(final, LeaderMode.FIXED)
    assert trace.best.lifetime >= trace.initial.lifetime


def test_stage2_needs_a_base_station(small_scenario):
    with pytest.raises(ConstraintError, match="bs"):
        optimize_stage2_backhaul(small_scenario, 1, FAST)
    with pytest.raises(ConstraintError):
        optimize_stage2_backhaul(backhaul_scenario(), -1, FAST)


def test_existing_relays_are_reused():
    scenario = backhaul_scenario().with_nodes([Node("RA", NodeRole.BACKHAUL_UAV, Position3D(70, 0, 40))])
    _, trace = optimize_stage2_backhaul(scenario, 1, OptimizerConfig(max_iterations=0))
    assert trace.initial.positions == {"RA": Position3D(70, 0, 40)}


def test_single_relay_matches_line_search():
    scenario = backhaul_scenario(jammers=False)
    final, trace = optimize_stage2_backhaul(scenario, 1, OptimizerConfig(max_iterations=500))

    leader, bs = scenario.leader.position.as_array(), scenario.base_station.position.as_array()
    best = 0.0
    for t in np.linspace(0.0, 1.0, 4001)[1:-1]:
        relay = Node("R1", NodeRole.BACKHAUL_UAV, Position3D.from_array(leader + t * (bs - leader)))
        graph = build_backhaul_graph(scenario.with_nodes([relay]))
        best = max(best, network_lifetime(graph))
    assert trace.best.lifetime >= 0.99 * best
    assert network_lifetime(build_backhaul_graph(final)) == trace.best.lifetime


def test_two_stage_pipeline():
    scenario = backhaul_scenario()
    result = optimize_two_stage(scenario, LeaderMode.CORRIDOR, 2, FAST)
    stage1_leader = result.stage1.best.positions["L"]
    assert result.scenario.leader.position == stage1_leader
    assert [r.node_id for r in result.scenario.relays] == ["R1", "R2"]
    assert result.scenario.base_station.position == scenario.base_station.position
    assert_feasible(result.scenario, LeaderMode.CORRIDOR)


def test_config_defaults():
    config = OptimizerConfig()
    assert (config.step_size, config.backtrack_factor, config.min_step) == (1.0, 0.5, 1e-4)
    assert (config.max_iterations, config.grad_tol) == (500, 1e-6)
    assert replace(config, seed=3).seed == 3
