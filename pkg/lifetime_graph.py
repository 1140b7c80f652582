"""
LOFT v1.0 - Lifetime Graph
Directed flow graph whose edge weights are link lifetimes, plus the matrices
the spectral layer works on.

Pipeline:
  Scenario + EdgePolicy  →  directed edges (tx, rx)
                         →  a_pq = E_p / (P_pq + P_p^c)          (seconds)
                         →  A_sym = (A + Aᵀ)/2,  D = diag(row sums),  L = D − A_sym
                         →  L_W = W^(-1/2) L W^(-1/2)

Stage 1 graphs hold CHs, gathering UAVs and the leader (the leader never
transmits, so its battery never enters the objective). Stage 2 graphs are
the backhaul chain leader → relay₁ → … → relay_k → BS.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from channel import LinkBudget, LinkType, RadioEnvironment, link_budget, link_type_for
from errors import GraphError
from model import Node, NodeRole, Position3D, Scenario
from utils.logger import get_logger

log = get_logger(__name__)


class EdgePolicy(Enum):
    """Which CH → UAV edges exist; every gathering UAV always feeds the leader."""
    TWO_HOP_PAIRED = "two_hop_paired"    # CH i → UAV i
    TWO_HOP_NEAREST = "two_hop_nearest"  # CH → closest UAV
    FULL = "full"                        # every CH → every UAV


@dataclass(frozen=True)
class GraphEdge:
    """One directed link with its budget and lifetime weight."""
    tx: str
    rx: str
    tx_index: int
    rx_index: int
    budget: LinkBudget
    weight: float

    @property
    def link_type(self) -> LinkType:
        return self.budget.link_type


@dataclass(frozen=True, eq=False)
class LifetimeGraph:
    """
    Immutable snapshot of the weighted flow graph.

    adjacency is the directed A; symmetric_adjacency, degree, laplacian and
    laplacian_w are all derived from A_sym.
    """
    node_ids: tuple[str, ...]
    roles: tuple[NodeRole, ...]
    positions: tuple[Position3D, ...]
    node_weights: np.ndarray
    edges: tuple[GraphEdge, ...]
    env: RadioEnvironment
    adjacency: np.ndarray
    symmetric_adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    laplacian_w: np.ndarray

    @property
    def size(self) -> int:
        return len(self.node_ids)

    def index(self, node_id: str) -> int:
        return self.node_ids.index(node_id)

    @property
    def generalized_degrees(self) -> np.ndarray:
        """β_p of the symmetrized graph."""
        return np.diag(self.degree).copy()


# ====================================================================== #
# Edge weights
# ====================================================================== #

def edge_weight(tx: Node, rx: Node, scenario: Scenario, env: RadioEnvironment | None = None) -> float:
    """
    Lifetime of the tx → rx link in seconds.

    Args:
        tx: Transmitting node (spends E_p).
        rx: Receiving node (sees the jamming).
        scenario: Supplies energy/channel parameters and jammers.
        env: Radio environment; defaults to the gathering-stage environment.

    Returns:
        E_p / (P_pq + P_p^c), or 0 when the required power is infeasible.
    """
    env = env or RadioEnvironment.for_gathering(scenario)
    budget = link_budget(tx.position, rx.position, link_type_for(tx.role, rx.role), env)
    return budget.lifetime(env.energy.node_energy, env.energy.circuit_power)


def laplacian_matrices(symmetric: np.ndarray, node_weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Degree matrix, Laplacian and weighted Laplacian of a symmetric adjacency.

    Returns:
        (D, L = D − A_sym, L_W = W^(-1/2) L W^(-1/2)); L_W is exactly symmetric.
    """
    degree = np.diag(symmetric.sum(axis=1))
    laplacian = degree - symmetric
    scale = 1.0 / np.sqrt(np.asarray(node_weights, dtype=float))
    laplacian_w = scale[:, None] * laplacian * scale[None, :]
    return degree, laplacian, 0.5 * (laplacian_w + laplacian_w.T)


def assemble_graph(nodes: Sequence[Node], pairs: Sequence[tuple[str, str]],
                   env: RadioEnvironment) -> LifetimeGraph:
    """
    Build a LifetimeGraph from an explicit node order and directed edge list.

    Raises:
        GraphError: empty edge list or an edge whose endpoints coincide.
    """
    if not pairs:
        raise GraphError("graph has no edges")

    node_ids = tuple(n.node_id for n in nodes)
    index = {node_id: i for i, node_id in enumerate(node_ids)}
    n = len(nodes)
    energy, circuit = env.energy.node_energy, env.energy.circuit_power

    adjacency = np.zeros((n, n))
    edges: list[GraphEdge] = []
    for tx_id, rx_id in pairs:
        i, j = index[tx_id], index[rx_id]
        tx, rx = nodes[i], nodes[j]
        if tx.position.distance_to(rx.position) == 0.0:
            raise GraphError(f"edge {tx_id} → {rx_id} has coincident endpoints at {tx.position}")
        budget = link_budget(tx.position, rx.position, link_type_for(tx.role, rx.role), env)
        weight = budget.lifetime(energy, circuit)
        if not budget.feasible:
            log.debug("Edge %s → %s infeasible (rate %.3g bit/s on %.3g Hz)", tx_id, rx_id, env.rate, env.bandwidth)
        adjacency[i, j] = weight
        edges.append(GraphEdge(tx_id, rx_id, i, j, budget, weight))

    symmetric = 0.5 * (adjacency + adjacency.T)
    weights = np.array([node.weight for node in nodes], dtype=float)
    degree, laplacian, laplacian_w = laplacian_matrices(symmetric, weights)

    return LifetimeGraph(
        node_ids=node_ids,
        roles=tuple(node.role for node in nodes),
        positions=tuple(node.position for node in nodes),
        node_weights=weights,
        edges=tuple(edges),
        env=env,
        adjacency=adjacency,
        symmetric_adjacency=symmetric,
        degree=degree,
        laplacian=laplacian,
        laplacian_w=laplacian_w,
    )


# ====================================================================== #
# Graph builders
# ====================================================================== #

def gathering_edges(scenario: Scenario, policy: EdgePolicy) -> list[tuple[str, str]]:
    """Directed (tx, rx) pairs of the stage-1 graph under a policy."""
    chs, uavs, leader = scenario.cluster_heads, scenario.uavs, scenario.leader
    if not chs or not uavs:
        raise GraphError("stage-1 graph needs at least one cluster head and one UAV")

    pairs: list[tuple[str, str]] = []
    if policy is EdgePolicy.TWO_HOP_PAIRED:
        if len(chs) != len(uavs):
            raise GraphError(f"paired policy needs equal counts: {len(chs)} CHs vs {len(uavs)} UAVs")
        pairs += [(ch.node_id, uav.node_id) for ch, uav in zip(chs, uavs)]
    elif policy is EdgePolicy.TWO_HOP_NEAREST:
        for ch in chs:
            # min() keeps the first UAV on ties
            nearest = min(uavs, key=lambda u: ch.position.distance_to(u.position))
            pairs.append((ch.node_id, nearest.node_id))
    elif policy is EdgePolicy.FULL:
        pairs += [(ch.node_id, uav.node_id) for ch in chs for uav in uavs]
    else:
        raise GraphError(f"unknown edge policy {policy!r}")

    pairs += [(uav.node_id, leader.node_id) for uav in uavs]
    return pairs


def build_graph(scenario: Scenario, policy: EdgePolicy = EdgePolicy.TWO_HOP_PAIRED,
                env: RadioEnvironment | None = None) -> LifetimeGraph:
    """
    Stage-1 lifetime graph over CHs, gathering UAVs and the leader.

    Args:
        scenario: A scenario that passes validate().
        policy: CH → UAV edge policy.
        env: Radio environment (defaults to B_p = B/N, rate R).
    """
    nodes = list(scenario.cluster_heads) + list(scenario.uavs) + [scenario.leader]
    env = env or RadioEnvironment.for_gathering(scenario)
    return assemble_graph(nodes, gathering_edges(scenario, policy), env)


def build_backhaul_graph(scenario: Scenario, env: RadioEnvironment | None = None) -> LifetimeGraph:
    """
    Stage-2 chain graph leader → relays (roster order) → BS.

    With no relays this is the single direct leader → BS link.
    """
    bs = scenario.base_station
    if bs is None:
        raise GraphError("backhaul graph needs a base station")
    chain = [scenario.leader] + list(scenario.relays) + [bs]
    pairs = [(a.node_id, b.node_id) for a, b in zip(chain, chain[1:])]
    env = env or RadioEnvironment.for_backhaul(scenario)
    return assemble_graph(chain, pairs, env)


# ====================================================================== #
# Objective
# ====================================================================== #

def network_lifetime(graph: LifetimeGraph) -> float:
    """Minimum directed edge weight: the time every link sustains its rate."""
    if not graph.edges:
        raise GraphError("network lifetime of a graph without edges")
    return min(edge.weight for edge in graph.edges)


def bottleneck_edge(graph: LifetimeGraph) -> GraphEdge:
    """The first edge (in edge order) attaining the network lifetime."""
    if not graph.edges:
        raise GraphError("graph has no edges")
    return min(graph.edges, key=lambda e: e.weight)
