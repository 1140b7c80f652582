"""
LOFT v1.0 - Domain Model
Node roster, radio/energy parameters and placement constraints shared by all modules.

Provides:
  - Position3D (meters, z = altitude)
  - NodeRole (cluster heads, gathering UAVs, leader, jammers, backhaul relays, BS)
  - ChannelParams / EnergyParams / Constraints with the reference defaults
  - Scenario: immutable roster plus parameters
  - validate(): invariant lint returning Violation records (never raises)

All values are SI: meters, watts, joules, hertz, bit/s.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Thermal floor: -174 dBm/Hz expressed in W/Hz.
THERMAL_NOISE_PSD = 10 ** (-174 / 10) * 1e-3


def db_to_linear(value_db: float) -> float:
    """Power ratio in dB to a linear factor."""
    return 10 ** (value_db / 10)


def dbm_to_watts(value_dbm: float) -> float:
    """Power in dBm to watts."""
    return 10 ** (value_dbm / 10) * 1e-3


@dataclass(frozen=True)
class Position3D:
    """A point in meters; z is the altitude above ground."""
    x: float
    y: float
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "Position3D":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def distance_to(self, other: "Position3D") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))

    def translated(self, offset: Iterable[float]) -> "Position3D":
        dx, dy, dz = offset
        return Position3D(self.x + dx, self.y + dy, self.z + dz)


class NodeRole(Enum):
    """Role of a node in the data-gathering network."""
    CLUSTER_HEAD = "cluster_head"
    GATHERING_UAV = "gathering_uav"
    LEADER = "leader"
    JAMMER = "jammer"
    BACKHAUL_UAV = "backhaul_uav"
    BASE_STATION = "base_station"

    @property
    def airborne(self) -> bool:
        return self in _AIRBORNE_ROLES

    @property
    def terrestrial(self) -> bool:
        return not self.airborne


_AIRBORNE_ROLES = frozenset({NodeRole.GATHERING_UAV, NodeRole.LEADER, NodeRole.BACKHAUL_UAV})


@dataclass(frozen=True)
class ChannelParams:
    """
    Propagation and traffic parameters.

    mu_los / mu_nlos are linear excess-loss factors (1 dB and 20 dB by default);
    noise_psd is in W/Hz; total_bandwidth is shared FDMA-style by the N gathering UAVs.
    """
    alpha_los: float = 2.05
    alpha_nlos: float = 2.32
    mu_los: float = db_to_linear(1.0)
    mu_nlos: float = db_to_linear(20.0)
    carrier_freq: float = 2e9
    noise_psd: float = THERMAL_NOISE_PSD
    total_bandwidth: float = 10e6
    rate_req: float = 4e6

    @classmethod
    def reference(cls, narrowband: bool = False) -> "ChannelParams":
        """
        Reference channel. The 10 kHz narrowband variant makes every link
        infeasible at 4 Mbps, so 10 MHz is the default.
        """
        return cls(total_bandwidth=10e3 if narrowband else 10e6)


@dataclass(frozen=True)
class EnergyParams:
    """Battery and power figures (joules / watts)."""
    node_energy: float = 20_000.0
    circuit_power: float = 0.1
    jammer_power: float = dbm_to_watts(30.0)


@dataclass(frozen=True)
class Constraints:
    """Leader altitude floor and inter-UAV safety distance (meters)."""
    h_min: float = 70.0
    d_min: float = 5.0


@dataclass(frozen=True)
class Node:
    """One entry of the scenario roster; weight is w_i of W = diag(w)."""
    node_id: str
    role: NodeRole
    position: Position3D
    weight: float = 1.0


@dataclass(frozen=True)
class Violation:
    """A single invariant violation reported by validate()."""
    code: str
    field: str
    message: str
    node_id: str | None = None

    def __str__(self) -> str:
        where = f" [{self.node_id}]" if self.node_id else ""
        return f"{self.code} ({self.field}){where}: {self.message}"


@dataclass(frozen=True)
class Scenario:
    """Immutable node roster plus channel, energy and constraint parameters."""
    nodes: tuple[Node, ...]
    channel: ChannelParams = field(default_factory=ChannelParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    constraints: Constraints = field(default_factory=Constraints)

    # ------------------------------------------------------------------ #
    def by_role(self, role: NodeRole) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.role is role)

    @property
    def cluster_heads(self) -> tuple[Node, ...]:
        return self.by_role(NodeRole.CLUSTER_HEAD)

    @property
    def uavs(self) -> tuple[Node, ...]:
        return self.by_role(NodeRole.GATHERING_UAV)

    @property
    def jammers(self) -> tuple[Node, ...]:
        return self.by_role(NodeRole.JAMMER)

    @property
    def relays(self) -> tuple[Node, ...]:
        return self.by_role(NodeRole.BACKHAUL_UAV)

    @property
    def leader(self) -> Node:
        leaders = self.by_role(NodeRole.LEADER)
        if len(leaders) != 1:
            raise ValueError(f"expected exactly one leader, found {len(leaders)}")
        return leaders[0]

    @property
    def base_station(self) -> Node | None:
        stations = self.by_role(NodeRole.BASE_STATION)
        return stations[0] if stations else None

    @property
    def jammer_positions(self) -> tuple[Position3D, ...]:
        return tuple(n.position for n in self.jammers)

    @property
    def node_weights(self) -> dict[str, float]:
        return {n.node_id: n.weight for n in self.nodes}

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def position(self, node_id: str) -> Position3D:
        return self.node(node_id).position

    # ------------------------------------------------------------------ #
    def with_positions(self, positions: Mapping[str, Position3D]) -> "Scenario":
        """Copy with some node positions replaced."""
        if not positions:
            return self
        nodes = tuple(
            replace(n, position=positions[n.node_id]) if n.node_id in positions else n
            for n in self.nodes
        )
        return replace(self, nodes=nodes)

    def with_nodes(self, extra: Iterable[Node] = (), drop_roles: Iterable[NodeRole] = ()) -> "Scenario":
        """Copy with every node of ``drop_roles`` removed and ``extra`` appended."""
        dropped = set(drop_roles)
        kept = tuple(n for n in self.nodes if n.role not in dropped)
        return replace(self, nodes=kept + tuple(extra))

    def translated(self, offset: Iterable[float]) -> "Scenario":
        """Copy with every node shifted by ``offset`` (altitudes included)."""
        offset = tuple(offset)
        return replace(self, nodes=tuple(
            replace(n, position=n.position.translated(offset)) for n in self.nodes
        ))


# ====================================================================== #
# Validation
# ====================================================================== #

_POSITIVE_CHANNEL_FIELDS = (
    "alpha_los", "alpha_nlos", "mu_los", "mu_nlos",
    "carrier_freq", "noise_psd", "total_bandwidth", "rate_req",
)


def _check_positive(value: float, field_name: str, out: list[Violation]) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        out.append(Violation("non-positive-parameter", field_name,
                             f"{field_name} must be finite and > 0, got {value!r}"))


def validate(scenario: Scenario, require_pairing: bool = False) -> list[Violation]:
    """
    Lint a scenario against the model invariants.

    Args:
        scenario: Scenario to check.
        require_pairing: Also require as many gathering UAVs as cluster heads
            (index-paired edge policy).

    Returns:
        Every violation found, in a fixed order; empty when the scenario is valid.
    """
    out: list[Violation] = []

    # --- Roster --------------------------------------------------------
    seen: set[str] = set()
    for n in scenario.nodes:
        if n.node_id in seen:
            out.append(Violation("duplicate-id", "nodes", f"node id {n.node_id!r} is used twice", n.node_id))
        seen.add(n.node_id)

    leaders = scenario.by_role(NodeRole.LEADER)
    if not leaders:
        out.append(Violation("missing-leader", "nodes", "scenario has no leader"))
    elif len(leaders) > 1:
        out.append(Violation("multiple-leaders", "nodes",
                             f"scenario has {len(leaders)} leaders, exactly one allowed"))

    if not scenario.cluster_heads:
        out.append(Violation("missing-cluster-heads", "nodes", "scenario has no cluster heads"))
    if not scenario.uavs:
        out.append(Violation("missing-uavs", "nodes", "scenario has no gathering UAVs"))
    if len(scenario.by_role(NodeRole.BASE_STATION)) > 1:
        out.append(Violation("multiple-base-stations", "nodes", "at most one base station allowed"))
    if require_pairing and len(scenario.uavs) != len(scenario.cluster_heads):
        out.append(Violation("uav-ch-count-mismatch", "nodes",
                             f"{len(scenario.uavs)} UAVs vs {len(scenario.cluster_heads)} cluster heads"))

    for n in scenario.nodes:
        p = n.position
        if not all(math.isfinite(v) for v in (p.x, p.y, p.z)):
            out.append(Violation("non-finite-position", "nodes.position",
                                 f"position {p} is not finite", n.node_id))
            continue
        if n.role.terrestrial and p.z != 0.0:
            out.append(Violation("terrestrial-altitude", "nodes.position",
                                 f"{n.role.value} must sit at z = 0, got z = {p.z}", n.node_id))
        elif p.z < 0.0:
            out.append(Violation("negative-altitude", "nodes.position",
                                 f"altitude must be >= 0, got z = {p.z}", n.node_id))
        if not (math.isfinite(n.weight) and n.weight > 0):
            out.append(Violation("non-positive-weight", "nodes.weight",
                                 f"node weight must be > 0, got {n.weight}", n.node_id))

    # --- Parameters ----------------------------------------------------
    for name in _POSITIVE_CHANNEL_FIELDS:
        _check_positive(getattr(scenario.channel, name), f"channel.{name}", out)
    ch = scenario.channel
    if ch.alpha_nlos < ch.alpha_los:
        out.append(Violation("alpha-order", "channel.alpha_nlos",
                             f"alpha_nlos ({ch.alpha_nlos}) must be >= alpha_los ({ch.alpha_los})"))

    _check_positive(scenario.energy.node_energy, "energy.node_energy", out)
    _check_positive(scenario.energy.circuit_power, "energy.circuit_power", out)
    jp = scenario.energy.jammer_power
    if not (math.isfinite(jp) and jp >= 0):
        out.append(Violation("negative-parameter", "energy.jammer_power",
                             f"energy.jammer_power must be >= 0, got {jp!r}"))

    _check_positive(scenario.constraints.h_min, "constraints.h_min", out)
    _check_positive(scenario.constraints.d_min, "constraints.d_min", out)

    return out
