"""
LOFT v1.0 - Placement Gradient
Analytic spatial gradient of λ₂(L_W) with respect to node coordinates,
and the central-difference oracle it is certified against.

    ∂λ₂/∂θ = Σ_{(p,q) ∈ E} ½ · (x_p/√w_p − x_q/√w_q)² · ∂a_pq/∂θ

The ½ comes from A_sym = (A + Aᵀ)/2. Edge partials follow the chain rule on
a_pq = E / (c · I_q · Γ⁻¹ · d_pq^α + P_c) with c = 2^(R/B_p) − 1:
  - transmitter p: through d_pq only
  - receiver q:    through d_pq and through every jammer distance in I_q
"""

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from channel import LinkType, RadioEnvironment, interference_plus_noise, inverse_pathloss, link_type_for
from lifetime_graph import EdgePolicy, LifetimeGraph, build_graph
from model import Node, Position3D, Scenario
from spectral import SpectralResult, graph_lambda2
from utils.logger import get_logger

log = get_logger(__name__)

AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class PlacementGradient:
    """
    ∂λ₂/∂(x, y, z) per node, in graph node order.

    Rows of immovable nodes are exactly zero. ``unreliable`` is only set by the
    finite-difference oracle when λ₂ is degenerate.
    """
    node_ids: tuple[str, ...]
    components: np.ndarray
    movable: frozenset[str]
    degenerate: bool = False
    unreliable: bool = False

    def for_node(self, node_id: str) -> np.ndarray:
        return self.components[self.node_ids.index(node_id)]

    @property
    def inf_norm(self) -> float:
        return float(np.abs(self.components).max()) if self.components.size else 0.0


# ====================================================================== #
# Edge partials
# ====================================================================== #

def edge_weight_gradients(tx: Position3D, rx: Position3D, link_type: LinkType,
                          env: RadioEnvironment) -> tuple[np.ndarray, np.ndarray]:
    """
    Gradients of a_pq with respect to the transmitter and receiver positions.

    Returns:
        (∇_tx a_pq, ∇_rx a_pq), each of shape (3,). Both vanish when the
        weight does not depend on geometry (R = 0 or an infeasible link).
    """
    zeros = np.zeros(3)
    factor = env.spectral_factor
    if factor == 0.0 or not np.isfinite(factor):
        return zeros, zeros.copy()

    p, q = tx.as_array(), rx.as_array()
    d = float(np.linalg.norm(q - p))
    alpha = env.exponent(link_type)
    gamma = inverse_pathloss(link_type, env.channel)
    energy, circuit = env.energy.node_energy, env.energy.circuit_power

    noise = interference_plus_noise(rx, env)
    power = factor * noise / gamma * d ** alpha
    da_dpower = -energy / (power + circuit) ** 2

    grad_power_tx = factor * noise / gamma * alpha * d ** (alpha - 2.0) * (p - q)

    grad_noise_rx = np.zeros(3)
    if env.jammers and env.energy.jammer_power > 0.0:
        gamma_j = inverse_pathloss(LinkType.G2A, env.channel)
        alpha_j = env.channel.alpha_nlos
        for jammer in env.jammers:
            offset = q - jammer.as_array()
            dj = float(np.linalg.norm(offset))
            grad_noise_rx += env.energy.jammer_power * gamma_j * (-alpha_j) * dj ** (-alpha_j - 2.0) * offset

    grad_power_rx = factor / gamma * (
        grad_noise_rx * d ** alpha + noise * alpha * d ** (alpha - 2.0) * (q - p)
    )
    return da_dpower * grad_power_tx, da_dpower * grad_power_rx


def edge_weight_partials(tx: Node, rx: Node, coordinate: str | int, scenario: Scenario,
                         env: RadioEnvironment | None = None) -> tuple[float, float]:
    """
    (∂a_pq/∂coord_tx, ∂a_pq/∂coord_rx) for one coordinate.

    Args:
        coordinate: "x", "y", "z" or an axis index.
    """
    axis = AXES.index(coordinate) if isinstance(coordinate, str) else int(coordinate)
    env = env or RadioEnvironment.for_gathering(scenario)
    g_tx, g_rx = edge_weight_gradients(tx.position, rx.position, link_type_for(tx.role, rx.role), env)
    return float(g_tx[axis]), float(g_rx[axis])


# ====================================================================== #
# λ₂ gradient
# ====================================================================== #

def lambda2_gradient(graph: LifetimeGraph, spectral: SpectralResult, movable: Iterable[str]) -> PlacementGradient:
    """
    Assemble ∂λ₂/∂position for every movable node of the graph.

    Args:
        graph: Lifetime graph the spectral result was computed on.
        spectral: λ₂ and Fiedler vector of graph.laplacian_w.
        movable: Node ids free to move; all other rows stay zero.
    """
    movable = frozenset(movable) & frozenset(graph.node_ids)
    scaled = spectral.fiedler / np.sqrt(graph.node_weights)
    components = np.zeros((graph.size, 3))

    for edge in graph.edges:
        tx_free = edge.tx in movable
        rx_free = edge.rx in movable
        if not (tx_free or rx_free):
            continue
        coupling = 0.5 * (scaled[edge.tx_index] - scaled[edge.rx_index]) ** 2
        if coupling == 0.0:
            continue
        g_tx, g_rx = edge_weight_gradients(
            graph.positions[edge.tx_index], graph.positions[edge.rx_index], edge.link_type, graph.env
        )
        if tx_free:
            components[edge.tx_index] += coupling * g_tx
        if rx_free:
            components[edge.rx_index] += coupling * g_rx

    return PlacementGradient(
        node_ids=graph.node_ids,
        components=components,
        movable=movable,
        degenerate=spectral.degenerate,
    )


def fd_gradient_oracle(scenario: Scenario, movable: Iterable[str], step: float = 1e-4,
                       builder: Callable[[Scenario], LifetimeGraph] | None = None) -> PlacementGradient:
    """
    Central-difference ∂λ₂/∂position, rebuilding the graph for every probe.

    Args:
        scenario: Scenario at which to differentiate.
        movable: Node ids to probe.
        step: Probe half-width in meters (> 0).
        builder: Scenario → LifetimeGraph (stage-1 paired graph by default).

    Returns:
        PlacementGradient flagged ``unreliable`` when λ₂ is degenerate.
    """
    if step <= 0:
        raise ValueError(f"finite-difference step must be > 0, got {step}")
    builder = builder or (lambda s: build_graph(s, EdgePolicy.TWO_HOP_PAIRED))

    base = builder(scenario)
    base_spectral = graph_lambda2(base)
    movable = frozenset(movable) & frozenset(base.node_ids)
    components = np.zeros((base.size, 3))

    for node_id in movable:
        row = base.index(node_id)
        origin = scenario.position(node_id).as_array()
        for axis in range(3):
            probes = []
            for sign in (1.0, -1.0):
                shifted = origin.copy()
                shifted[axis] += sign * step
                probe = scenario.with_positions({node_id: Position3D.from_array(shifted)})
                probes.append(graph_lambda2(builder(probe)).lambda2)
            components[row, axis] = (probes[0] - probes[1]) / (2.0 * step)

    if base_spectral.degenerate:
        log.warning("Finite-difference gradient unreliable: λ₂ is degenerate (gap %.3e)",
                    base_spectral.multiplicity_gap)
    return PlacementGradient(
        node_ids=base.node_ids,
        components=components,
        movable=movable,
        degenerate=base_spectral.degenerate,
        unreliable=base_spectral.degenerate,
    )


def compare_gradients(analytic: PlacementGradient, oracle: PlacementGradient,
                      floor: float = 1e-8) -> tuple[float, str, str]:
    """
    Relative ∞-norm error between two gradients over the same node order.

    Returns:
        (‖analytic − oracle‖∞ / max(‖oracle‖∞, floor), worst node id, worst axis)
    """
    diff = np.abs(analytic.components - oracle.components)
    row, axis = np.unravel_index(int(np.argmax(diff)), diff.shape)
    error = float(diff[row, axis]) / max(oracle.inf_norm, floor)
    return error, analytic.node_ids[row], AXES[axis]
