"""
LOFT v1.0 - Placement Optimizer
Projected gradient ascent on λ₂ of the lifetime graph.

Loop (both stages):
  build graph → λ₂ + Fiedler → ∂λ₂/∂position over the movable set
  → normalize to ∞-norm 1 → step → project onto constraints
  → backtrack until λ₂ does not decrease → repeat

Stage 1 moves the gathering UAVs (and the leader unless it is fixed).
Stage 2 freezes the leader and moves the backhaul relays of the chain
leader → relay₁ → … → relay_k → BS.

λ₂ is only a surrogate for the max-min lifetime, so the true network
lifetime is tracked too; the placement handed back is the accepted iterate
with the longest lifetime (iterate 0 is the starting placement).
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from channel import RadioEnvironment
from errors import ChannelError, ConstraintError, GraphError
from gradient import lambda2_gradient
from lifetime_graph import (EdgePolicy, LifetimeGraph, bottleneck_edge, build_backhaul_graph, build_graph,
                            network_lifetime)
from model import Constraints, Node, NodeRole, Position3D, Scenario
from spectral import graph_lambda2
from utils.logger import get_logger
from utils.timing import PerformanceTimer, PhaseMetrics

log = get_logger(__name__)

SEPARATION_TOL = 1e-9
FEASIBILITY_TOL = 1e-6


class LeaderMode(Enum):
    """How the leader may move during stage 1."""
    FIXED = "fixed"        # frozen
    CORRIDOR = "corridor"  # moves, z >= h_min
    FREE = "free"          # moves anywhere above ground


@dataclass(frozen=True)
class OptimizerConfig:
    """Step control of the ascent; step lengths are meters per unit ∞-norm direction."""
    step_size: float = 1.0
    backtrack_factor: float = 0.5
    max_iterations: int = 500
    grad_tol: float = 1e-6
    min_step: float = 1e-4
    edge_policy: EdgePolicy = EdgePolicy.TWO_HOP_PAIRED
    projection_sweeps: int = 100
    seed: int = 0


@dataclass(frozen=True)
class TraceRecord:
    """
    One accepted iterate.

    grad_norm is the ∞-norm of the gradient that produced this iterate and
    step the accepted step length (both 0 for the starting placement).
    """
    iteration: int
    positions: dict[str, Position3D]
    lambda2: float
    lifetime: float
    grad_norm: float
    step: float
    projection_events: tuple[str, ...] = ()
    degenerate: bool = False
    backtracks: int = 0


@dataclass
class OptimizerTrace:
    """Per-iteration history of one optimizer run."""
    stage: str
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: str = ""
    best_iteration: int = 0
    surrogate_gap_events: int = 0
    bottleneck: tuple[str, str] | None = None
    metrics: PhaseMetrics | None = None

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def hit_max_iterations(self) -> bool:
        return self.stop_reason == "max-iterations"

    @property
    def initial(self) -> TraceRecord:
        return self.records[0]

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def best(self) -> TraceRecord:
        return self.records[self.best_iteration]

    def lambda2_series(self) -> list[float]:
        return [r.lambda2 for r in self.records]


@dataclass(frozen=True)
class Projection:
    """Outcome of project_constraints()."""
    positions: dict[str, Position3D]
    events: tuple[str, ...]
    converged: bool


@dataclass(frozen=True)
class TwoStageResult:
    """Stage-1 placement followed by the stage-2 backhaul placement."""
    scenario: Scenario
    stage1: OptimizerTrace
    stage2: OptimizerTrace


# ====================================================================== #
# Constraints
# ====================================================================== #

def project_constraints(positions: Mapping[str, Position3D], constraints: Constraints, mode: LeaderMode,
                        leader_id: str | None = None, rng: np.random.Generator | None = None,
                        max_sweeps: int = 100) -> Projection:
    """
    Map a placement onto the feasible set.

    Every id other than ``leader_id`` is a UAV: UAVs are pushed apart pairwise
    (symmetrically, along their connecting line, to exactly d_min) and kept at
    z >= 0, sweeping until no pair is too close or ``max_sweeps`` is spent.
    The leader is clamped to z >= h_min in corridor mode, z >= 0 in free mode
    and left alone in fixed mode.

    Returns:
        Projection with the events raised ("leader-corridor-clamp",
        "leader-ground-clamp", "separation", "altitude-clamp",
        "projection-nonconverged").
    """
    rng = rng or np.random.default_rng(0)
    points = {node_id: pos.as_array() for node_id, pos in positions.items()}
    events: list[str] = []

    if leader_id is not None and leader_id in points:
        leader = points[leader_id]
        if mode is LeaderMode.CORRIDOR and leader[2] < constraints.h_min:
            leader[2] = constraints.h_min
            events.append("leader-corridor-clamp")
        elif mode is LeaderMode.FREE and leader[2] < 0.0:
            leader[2] = 0.0
            events.append("leader-ground-clamp")

    uav_ids = [node_id for node_id in points if node_id != leader_id]
    d_min = constraints.d_min
    converged = False
    for _ in range(max_sweeps):
        moved = False
        for a, b in itertools.combinations(uav_ids, 2):
            offset = points[b] - points[a]
            d = float(np.linalg.norm(offset))
            if d >= d_min - SEPARATION_TOL:
                continue
            if d == 0.0:
                offset = rng.normal(size=3)
                d = float(np.linalg.norm(offset))
            unit = offset / d
            middle = 0.5 * (points[a] + points[b])
            points[a] = middle - 0.5 * d_min * unit
            points[b] = middle + 0.5 * d_min * unit
            moved = True
            if "separation" not in events:
                events.append("separation")
        for node_id in uav_ids:
            if points[node_id][2] < 0.0:
                points[node_id][2] = 0.0
                moved = True
                if "altitude-clamp" not in events:
                    events.append("altitude-clamp")
        if not moved:
            converged = True
            break

    if not converged:
        events.append("projection-nonconverged")
        log.warning("Constraint projection did not converge in %d sweeps", max_sweeps)

    return Projection(
        positions={node_id: Position3D.from_array(p) for node_id, p in points.items()},
        events=tuple(events),
        converged=converged,
    )


def constraint_violations(positions: Mapping[str, Position3D], constraints: Constraints, mode: LeaderMode,
                          leader_id: str | None = None, tol: float = FEASIBILITY_TOL) -> list[str]:
    """Human-readable list of corridor, separation and altitude violations; empty when feasible."""
    problems: list[str] = []
    if leader_id is not None and leader_id in positions and mode is not LeaderMode.FREE:
        z = positions[leader_id].z
        if z < constraints.h_min - tol:
            problems.append(f"constraints.h_min: leader {leader_id} at z = {z:.6g} below h_min = {constraints.h_min:.6g}")
    uav_ids = [node_id for node_id in positions if node_id != leader_id]
    for node_id in uav_ids:
        if positions[node_id].z < -tol:
            problems.append(f"nodes.position: UAV {node_id} below ground (z = {positions[node_id].z:.6g})")
    for a, b in itertools.combinations(uav_ids, 2):
        d = positions[a].distance_to(positions[b])
        if d < constraints.d_min - tol:
            problems.append(f"constraints.d_min: UAVs {a} and {b} are {d:.6g} m apart (d_min = {constraints.d_min:.6g})")
    return problems


# ====================================================================== #
# Ascent engine
# ====================================================================== #

def _ascend(scenario: Scenario, movable: list[str], leader_id: str | None, mode: LeaderMode,
            builder: Callable[[Scenario], LifetimeGraph], config: OptimizerConfig,
            stage: str) -> tuple[Scenario, OptimizerTrace]:
    rng = np.random.default_rng(config.seed)
    timer = PerformanceTimer()
    trace = OptimizerTrace(stage=stage)

    with timer.measure("graph"):
        graph = builder(scenario)
    with timer.measure("eigen"):
        spectral = graph_lambda2(graph)
    lifetime = network_lifetime(graph)

    state = scenario
    trace.records.append(TraceRecord(
        iteration=0,
        positions={node_id: state.position(node_id) for node_id in movable},
        lambda2=spectral.lambda2,
        lifetime=lifetime,
        grad_norm=0.0,
        step=0.0,
        degenerate=spectral.degenerate,
    ))
    best_state, best_lifetime, best_graph = state, lifetime, graph

    log.info("%s ascent: %d movable nodes, λ₂ = %.6g, lifetime = %.6g s",
             stage, len(movable), spectral.lambda2, lifetime)

    stop_reason = "max-iterations"
    if not movable:
        stop_reason = "no-movable"
    else:
        for iteration in range(1, config.max_iterations + 1):
            with timer.measure("gradient"):
                grad = lambda2_gradient(graph, spectral, movable)
            norm = grad.inf_norm
            if norm <= config.grad_tol:
                stop_reason = "converged"
                break
            if grad.degenerate:
                log.debug("Iteration %d: degenerate λ₂, Fiedler vector used as subgradient", iteration)

            step, backtracks, accepted = config.step_size, 0, None
            with timer.measure("line_search"):
                while step >= config.min_step:
                    candidate = {
                        node_id: Position3D.from_array(
                            state.position(node_id).as_array() + step / norm * grad.for_node(node_id)
                        )
                        for node_id in movable
                    }
                    projection = project_constraints(candidate, state.constraints, mode, leader_id,
                                                     rng, config.projection_sweeps)
                    if projection.converged:
                        trial = state.with_positions(projection.positions)
                        try:
                            trial_graph = builder(trial)
                            trial_spectral = graph_lambda2(trial_graph)
                        except (GraphError, ChannelError) as exc:
                            log.debug("Iteration %d: step %.3g rejected (%s)", iteration, step, exc)
                        else:
                            if trial_spectral.lambda2 >= spectral.lambda2:
                                accepted = (trial, trial_graph, trial_spectral, projection)
                                break
                    step *= config.backtrack_factor
                    backtracks += 1

            if accepted is None:
                stop_reason = "step-exhausted"
                break

            state, graph, spectral, projection = accepted
            lifetime = network_lifetime(graph)
            trace.records.append(TraceRecord(
                iteration=iteration,
                positions={node_id: state.position(node_id) for node_id in movable},
                lambda2=spectral.lambda2,
                lifetime=lifetime,
                grad_norm=norm,
                step=step,
                projection_events=projection.events,
                degenerate=spectral.degenerate,
                backtracks=backtracks,
            ))
            log.debug("Iteration %d: λ₂ = %.9g, lifetime = %.6g s, step = %.3g, backtracks = %d",
                      iteration, spectral.lambda2, lifetime, step, backtracks)
            if lifetime >= best_lifetime:
                best_state, best_lifetime, best_graph = state, lifetime, graph
                trace.best_iteration = iteration

    trace.stop_reason = stop_reason
    weakest = bottleneck_edge(best_graph)
    trace.bottleneck = (weakest.tx, weakest.rx)
    if trace.best_iteration != trace.iterations:
        trace.surrogate_gap_events += 1
        log.warning("%s: λ₂ kept rising after the best lifetime (iteration %d of %d); returning the best placement",
                    stage, trace.best_iteration, trace.iterations)
    if stop_reason == "max-iterations" and movable:
        log.warning("%s ascent stopped by max_iterations (%d)", stage, config.max_iterations)

    trace.metrics = timer.get_metrics()
    timer.log_summary(stage)
    log.info("%s ascent done (%s): %d iterations, λ₂ %.6g → %.6g, lifetime %.6g → %.6g s, bottleneck %s → %s",
             stage, stop_reason, trace.iterations, trace.initial.lambda2, trace.final.lambda2,
             trace.initial.lifetime, best_lifetime, *trace.bottleneck)
    return best_state, trace


# ====================================================================== #
# Stage 1
# ====================================================================== #

def optimize_stage1(scenario: Scenario, mode: LeaderMode = LeaderMode.CORRIDOR,
                    config: OptimizerConfig | None = None) -> tuple[Scenario, OptimizerTrace]:
    """
    Place the gathering UAVs (and the leader unless fixed).

    Args:
        scenario: Valid scenario whose initial placement is feasible.
        mode: Leader mode.
        config: Step control and edge policy.

    Returns:
        (optimized scenario, trace). A fixed leader keeps its exact position.

    Raises:
        ConstraintError: the initial placement violates h_min, d_min or z >= 0.
    """
    config = config or OptimizerConfig()
    leader_id = scenario.leader.node_id
    movable = [u.node_id for u in scenario.uavs]
    if mode is not LeaderMode.FIXED:
        movable.append(leader_id)

    positions = {node_id: scenario.position(node_id) for node_id in movable + [leader_id]}
    problems = constraint_violations(positions, scenario.constraints, mode, leader_id)
    if problems:
        raise ConstraintError("initial placement infeasible: " + "; ".join(problems))

    def builder(s: Scenario) -> LifetimeGraph:
        return build_graph(s, config.edge_policy)

    return _ascend(scenario, movable, leader_id, mode, builder, config, stage=f"stage1-{mode.value}")


# ====================================================================== #
# Stage 2
# ====================================================================== #

def initial_relays(leader: Position3D, bs: Position3D, count: int) -> list[Node]:
    """Relays evenly spaced on the leader–BS segment."""
    start, end = leader.as_array(), bs.as_array()
    return [
        Node(f"R{i}", NodeRole.BACKHAUL_UAV, Position3D.from_array(start + i / (count + 1) * (end - start)))
        for i in range(1, count + 1)
    ]


def optimize_stage2_backhaul(scenario: Scenario, n_relays: int, config: OptimizerConfig | None = None,
                             bandwidth: float | None = None) -> tuple[Scenario, OptimizerTrace]:
    """
    Place k backhaul relays between the frozen leader and the BS.

    Existing BACKHAUL_UAV nodes are used as the starting placement when there
    are exactly k of them; otherwise k relays are spread along the leader–BS
    segment. With k = 0 the direct leader → BS link is evaluated only.

    Raises:
        ConstraintError: no base station, k < 0, or relays that cannot be separated.
    """
    config = config or OptimizerConfig()
    bs = scenario.base_station
    if bs is None:
        raise ConstraintError("bs: backhaul placement needs a base station")
    if n_relays < 0:
        raise ConstraintError(f"backhaul.relays: relay count must be >= 0, got {n_relays}")

    leader = scenario.leader
    if len(scenario.relays) != n_relays:
        scenario = scenario.with_nodes(initial_relays(leader.position, bs.position, n_relays),
                                       drop_roles=[NodeRole.BACKHAUL_UAV])
    movable = [r.node_id for r in scenario.relays]

    positions = {node_id: scenario.position(node_id) for node_id in movable}
    if constraint_violations(positions, scenario.constraints, LeaderMode.FIXED):
        projection = project_constraints(positions, scenario.constraints, LeaderMode.FIXED,
                                         rng=np.random.default_rng(config.seed),
                                         max_sweeps=config.projection_sweeps)
        if not projection.converged:
            raise ConstraintError("constraints.d_min: initial relays cannot be separated")
        scenario = scenario.with_positions(projection.positions)

    env = RadioEnvironment.for_backhaul(scenario, bandwidth)

    def builder(s: Scenario) -> LifetimeGraph:
        return build_backhaul_graph(s, env)

    return _ascend(scenario, movable, None, LeaderMode.FIXED, builder, config, stage="stage2-backhaul")


def optimize_two_stage(scenario: Scenario, mode: LeaderMode, n_relays: int,
                       config: OptimizerConfig | None = None) -> TwoStageResult:
    """Stage 1, then stage 2 around the leader stage 1 settled on."""
    placed, stage1 = optimize_stage1(scenario, mode, config)
    final, stage2 = optimize_stage2_backhaul(placed, n_relays, config)
    return TwoStageResult(scenario=final, stage1=stage1, stage2=stage2)
