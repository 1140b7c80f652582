"""
LOFT v1.0 - Configuration Loader
Reads the JSON run configuration and (de)serializes scenarios.

Quantities may be bare SI numbers or strings with a unit tag:
    "5 m", "2 GHz", "10 MHz", "4 Mbps", "30 dBm", "20 kJ", "20 dB", "-174 dBm/Hz"
Everything is normalized to SI (m, Hz, bit/s, W, J, W/Hz, s) on load.
Every error names the dotted field it comes from, e.g. ``constraints.d_min``.
"""

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from errors import ConfigError
from harness import ScenarioGenConfig, generate_scenario
from lifetime_graph import EdgePolicy
from model import ChannelParams, Constraints, EnergyParams, Node, NodeRole, Position3D, Scenario, validate
from optimizer import OptimizerConfig
from utils.logger import get_logger

log = get_logger(__name__)

SCHEMA_VERSION = "1.0"
DEFAULT_CONFIG_PATH = Path(__file__).parent / "config.json"

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")

# Linear units: multiplier to SI. Logarithmic units: (reference in SI).
_LINEAR_UNITS: dict[str, dict[str, float]] = {
    "length": {"m": 1.0, "km": 1e3},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "rate": {"bps": 1.0, "kbps": 1e3, "Mbps": 1e6, "Gbps": 1e9},
    "power": {"W": 1.0, "mW": 1e-3},
    "energy": {"J": 1.0, "kJ": 1e3, "Wh": 3600.0},
    "ratio": {},
    "psd": {"W/Hz": 1.0, "mW/Hz": 1e-3},
    "time": {"s": 1.0},
    "number": {},
}
_LOG_UNITS: dict[str, dict[str, float]] = {
    "power": {"dBm": 1e-3, "dBW": 1.0},
    "ratio": {"dB": 1.0},
    "psd": {"dBm/Hz": 1e-3, "dBW/Hz": 1.0},
}


def parse_quantity(value: Any, dimension: str, field_name: str) -> float:
    """
    Normalize one configured quantity to SI.

    Args:
        value: Bare number (already SI) or "<number> <unit>".
        dimension: Key of the unit tables ("length", "power", ...).
        field_name: Dotted name used in error messages.

    Raises:
        ConfigError: malformed value or a unit foreign to the dimension.
    """
    if isinstance(value, bool):
        raise ConfigError(field_name, f"expected a {dimension} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(field_name, f"expected a {dimension} quantity, got {value!r}")

    match = _QUANTITY.match(value)
    if not match:
        raise ConfigError(field_name, f"cannot parse {value!r} as a {dimension} quantity")
    number, unit = float(match.group(1)), match.group(2)
    if not unit:
        return number
    if unit in _LINEAR_UNITS[dimension]:
        return number * _LINEAR_UNITS[dimension][unit]
    if unit in _LOG_UNITS.get(dimension, {}):
        return 10 ** (number / 10) * _LOG_UNITS[dimension][unit]
    allowed = sorted(_LINEAR_UNITS[dimension]) + sorted(_LOG_UNITS.get(dimension, {}))
    raise ConfigError(field_name, f"unknown {dimension} unit {unit!r} (allowed: {', '.join(allowed) or 'none'})")


def _section(data: dict, name: str) -> dict:
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(name, "expected an object")
    return section


def _integer(value: Any, field_name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field_name, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field_name, f"must be >= {minimum}, got {value}")
    return value


def _range(value: Any, dimension: str, field_name: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(field_name, f"expected [low, high], got {value!r}")
    return (parse_quantity(value[0], dimension, f"{field_name}[0]"),
            parse_quantity(value[1], dimension, f"{field_name}[1]"))


def _position(value: Any, field_name: str) -> Position3D:
    if not isinstance(value, (list, tuple)) or len(value) not in (2, 3):
        raise ConfigError(field_name, f"expected [x, y] or [x, y, z], got {value!r}")
    coords = [parse_quantity(v, "length", f"{field_name}[{i}]") for i, v in enumerate(value)]
    return Position3D(*coords)


# ====================================================================== #
# Parameter blocks
# ====================================================================== #

def parse_channel(section: dict) -> ChannelParams:
    """Channel block → ChannelParams (bandwidth defaults to 10 MHz)."""
    defaults = ChannelParams()
    narrowband = section.get("narrowband", False)
    if not isinstance(narrowband, bool):
        raise ConfigError("channel.narrowband", f"expected true/false, got {narrowband!r}")

    def get(key: str, dimension: str, default: float) -> float:
        return parse_quantity(section[key], dimension, f"channel.{key}") if key in section else default

    bandwidth = get("bandwidth", "frequency", defaults.total_bandwidth)
    if narrowband:
        bandwidth = ChannelParams.reference(narrowband=True).total_bandwidth
    return ChannelParams(
        alpha_los=get("alpha_los", "number", defaults.alpha_los),
        alpha_nlos=get("alpha_nlos", "number", defaults.alpha_nlos),
        mu_los=get("mu_los", "ratio", defaults.mu_los),
        mu_nlos=get("mu_nlos", "ratio", defaults.mu_nlos),
        carrier_freq=get("carrier_freq", "frequency", defaults.carrier_freq),
        noise_psd=get("noise_psd", "psd", defaults.noise_psd),
        total_bandwidth=bandwidth,
        rate_req=get("rate", "rate", defaults.rate_req),
    )


def parse_energy(section: dict) -> EnergyParams:
    defaults = EnergyParams()
    return EnergyParams(
        node_energy=parse_quantity(section.get("node_energy", defaults.node_energy), "energy", "energy.node_energy"),
        circuit_power=parse_quantity(section.get("circuit_power", defaults.circuit_power), "power",
                                     "energy.circuit_power"),
        jammer_power=parse_quantity(section.get("jammer_power", defaults.jammer_power), "power",
                                    "energy.jammer_power"),
    )


def parse_constraints(section: dict) -> Constraints:
    defaults = Constraints()
    return Constraints(
        h_min=parse_quantity(section.get("h_min", defaults.h_min), "length", "constraints.h_min"),
        d_min=parse_quantity(section.get("d_min", defaults.d_min), "length", "constraints.d_min"),
    )


def parse_edge_policy(section: dict) -> EdgePolicy:
    name = section.get("edge_policy", EdgePolicy.TWO_HOP_PAIRED.value)
    try:
        return EdgePolicy(name)
    except ValueError:
        allowed = ", ".join(p.value for p in EdgePolicy)
        raise ConfigError("graph.edge_policy", f"unknown policy {name!r} (allowed: {allowed})") from None


def parse_optimizer(section: dict, policy: EdgePolicy, seed: int) -> OptimizerConfig:
    """Optimizer block → OptimizerConfig, checking every step-control field."""
    defaults = OptimizerConfig()
    step_size = parse_quantity(section.get("step_size", defaults.step_size), "length", "optimizer.step_size")
    factor = parse_quantity(section.get("backtrack_factor", defaults.backtrack_factor), "number",
                            "optimizer.backtrack_factor")
    grad_tol = parse_quantity(section.get("grad_tol", defaults.grad_tol), "number", "optimizer.grad_tol")
    min_step = parse_quantity(section.get("min_step", defaults.min_step), "length", "optimizer.min_step")

    for name, value in (("step_size", step_size), ("grad_tol", grad_tol), ("min_step", min_step)):
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(f"optimizer.{name}", f"must be finite and > 0, got {value!r}")
    if not 0.0 < factor < 1.0:
        raise ConfigError("optimizer.backtrack_factor", f"must lie in (0, 1), got {factor!r}")

    return OptimizerConfig(
        step_size=step_size,
        backtrack_factor=factor,
        max_iterations=_integer(section.get("max_iterations", defaults.max_iterations),
                                "optimizer.max_iterations", minimum=0),
        grad_tol=grad_tol,
        min_step=min_step,
        edge_policy=policy,
        projection_sweeps=_integer(section.get("projection_sweeps", defaults.projection_sweeps),
                                   "optimizer.projection_sweeps", minimum=1),
        seed=seed,
    )


def parse_nodes(items: Any, field_name: str = "scenario.nodes") -> tuple[Node, ...]:
    """Explicit node list: [{"id", "role", "position", "weight"?}, ...]."""
    if not isinstance(items, list):
        raise ConfigError(field_name, "expected a list of nodes")
    nodes = []
    for i, item in enumerate(items):
        where = f"{field_name}[{i}]"
        if not isinstance(item, dict) or "id" not in item or "role" not in item or "position" not in item:
            raise ConfigError(where, "each node needs id, role and position")
        try:
            role = NodeRole(item["role"])
        except ValueError:
            allowed = ", ".join(r.value for r in NodeRole)
            raise ConfigError(f"{where}.role", f"unknown role {item['role']!r} (allowed: {allowed})") from None
        weight = parse_quantity(item.get("weight", 1.0), "number", f"{where}.weight")
        nodes.append(Node(str(item["id"]), role, _position(item["position"], f"{where}.position"), weight))
    return tuple(nodes)


def _check_parameters(channel: ChannelParams, energy: EnergyParams, constraints: Constraints) -> None:
    # Parameter checks of validate() apply to an empty roster too; roster codes are skipped.
    parameter_codes = {"non-positive-parameter", "alpha-order", "negative-parameter"}
    for violation in validate(Scenario(nodes=(), channel=channel, energy=energy, constraints=constraints)):
        if violation.code in parameter_codes:
            raise ConfigError(violation.field, violation.message)


# ====================================================================== #
# Run configuration
# ====================================================================== #

@dataclass(frozen=True)
class RunConfig:
    """Fully parsed run configuration (SI units throughout)."""
    path: Path | None
    seed: int
    channel: ChannelParams
    energy: EnergyParams
    constraints: Constraints
    generator: ScenarioGenConfig
    optimizer: OptimizerConfig
    nodes: tuple[Node, ...] | None = None
    base_station: Position3D | None = None
    trials: int = 200
    jobs: int = 1
    progress: bool = False
    relays: int = 1
    gradient_samples: int = 100
    gradient_step: float = 1e-4
    gradient_tolerance: float = 1e-4
    log_level: str = "INFO"
    log_file: Path | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def scenario(self, seed: Any = None) -> Scenario:
        """
        The configured scenario: the explicit node list when present,
        otherwise a generated one (seeded by ``seed`` or the run seed).
        """
        if self.nodes is not None:
            nodes = self.nodes
            if self.base_station is not None and not any(n.role is NodeRole.BASE_STATION for n in nodes):
                nodes = nodes + (Node("BS", NodeRole.BASE_STATION, self.base_station),)
            return Scenario(nodes=nodes, channel=self.channel, energy=self.energy, constraints=self.constraints)
        return generate_scenario(replace(self.generator, seed=self.seed if seed is None else seed))

    def sampled_scenario(self, seed: Any) -> Scenario:
        """A generated scenario seeded by ``seed``, ignoring any explicit node list."""
        return generate_scenario(replace(self.generator, seed=seed))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, optimizer=replace(self.optimizer, seed=seed))


def parse_config(data: dict, path: Path | None = None) -> RunConfig:
    """
    Build a RunConfig from an already-decoded JSON object.

    Raises:
        ConfigError: any invalid field.
    """
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")

    seed = _integer(data.get("seed", 0), "seed", minimum=0)
    channel = parse_channel(_section(data, "channel"))
    energy = parse_energy(_section(data, "energy"))
    constraints = parse_constraints(_section(data, "constraints"))
    _check_parameters(channel, energy, constraints)

    policy = parse_edge_policy(_section(data, "graph"))
    optimizer = parse_optimizer(_section(data, "optimizer"), policy, seed)

    scenario = _section(data, "scenario")
    gen = scenario.get("generator", {})
    if not isinstance(gen, dict):
        raise ConfigError("scenario.generator", "expected an object")
    region = gen.get("region", {})
    if not isinstance(region, dict):
        raise ConfigError("scenario.generator.region", "expected an object with x and y")
    base_station = (_position(scenario["base_station"], "scenario.base_station")
                    if scenario.get("base_station") is not None else None)

    defaults = ScenarioGenConfig()
    generator = ScenarioGenConfig(
        x_range=_range(region["x"], "length", "scenario.generator.region.x") if "x" in region else defaults.x_range,
        y_range=_range(region["y"], "length", "scenario.generator.region.y") if "y" in region else defaults.y_range,
        n_uavs=_integer(gen.get("n_uavs", defaults.n_uavs), "scenario.generator.n_uavs", minimum=1),
        n_chs=_integer(gen.get("n_chs", defaults.n_chs), "scenario.generator.n_chs", minimum=1),
        n_jammers=_integer(gen.get("n_jammers", defaults.n_jammers), "scenario.generator.n_jammers", minimum=0),
        uav_altitude=(_range(gen["uav_altitude"], "length", "scenario.generator.uav_altitude")
                      if "uav_altitude" in gen else defaults.uav_altitude),
        seed=seed,
        base_station=base_station,
        channel=channel,
        energy=energy,
        constraints=constraints,
    )
    generator.check()

    nodes = parse_nodes(scenario["nodes"]) if scenario.get("nodes") is not None else None

    montecarlo = _section(data, "montecarlo")
    backhaul = _section(data, "backhaul")
    gradient = _section(data, "gradient_check")
    logging_section = _section(data, "logging")

    gradient_step = parse_quantity(gradient.get("step", 1e-4), "length", "gradient_check.step")
    if not gradient_step > 0:
        raise ConfigError("gradient_check.step", f"must be > 0, got {gradient_step}")
    progress = montecarlo.get("progress", False)
    if not isinstance(progress, bool):
        raise ConfigError("montecarlo.progress", f"expected true/false, got {progress!r}")
    log_file = logging_section.get("file", "logs/loft.log")

    return RunConfig(
        path=path,
        seed=seed,
        channel=channel,
        energy=energy,
        constraints=constraints,
        generator=generator,
        optimizer=optimizer,
        nodes=nodes,
        base_station=base_station,
        trials=_integer(montecarlo.get("trials", 200), "montecarlo.trials", minimum=0),
        jobs=_integer(montecarlo.get("jobs", 1), "montecarlo.jobs", minimum=1),
        progress=progress,
        relays=_integer(backhaul.get("relays", 1), "backhaul.relays", minimum=0),
        gradient_samples=_integer(gradient.get("samples", 100), "gradient_check.samples", minimum=0),
        gradient_step=gradient_step,
        gradient_tolerance=parse_quantity(gradient.get("tolerance", 1e-4), "number", "gradient_check.tolerance"),
        log_level=str(logging_section.get("level", "INFO")).upper(),
        log_file=Path(log_file) if log_file else None,
        raw=data,
    )


def load_config(path: str | Path = DEFAULT_CONFIG_PATH) -> RunConfig:
    """
    Load and parse a configuration file.

    Raises:
        ConfigError: missing file, invalid JSON or an invalid field.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None

    config = parse_config(data, path)
    log.debug("Loaded configuration from %s (seed %d)", path, config.seed)
    return config


# ====================================================================== #
# Scenario files
# ====================================================================== #

def scenario_to_dict(scenario: Scenario) -> dict:
    """
    Scenario → configuration-shaped dict with bare SI numbers and an explicit
    node list; scenario_from_dict() restores an equal Scenario.
    """
    ch, en, co = scenario.channel, scenario.energy, scenario.constraints
    return {
        "schema_version": SCHEMA_VERSION,
        "channel": {
            "alpha_los": ch.alpha_los,
            "alpha_nlos": ch.alpha_nlos,
            "mu_los": ch.mu_los,
            "mu_nlos": ch.mu_nlos,
            "carrier_freq": ch.carrier_freq,
            "noise_psd": ch.noise_psd,
            "bandwidth": ch.total_bandwidth,
            "rate": ch.rate_req,
        },
        "energy": {
            "node_energy": en.node_energy,
            "circuit_power": en.circuit_power,
            "jammer_power": en.jammer_power,
        },
        "constraints": {"h_min": co.h_min, "d_min": co.d_min},
        "scenario": {
            "nodes": [
                {
                    "id": n.node_id,
                    "role": n.role.value,
                    "position": [n.position.x, n.position.y, n.position.z],
                    "weight": n.weight,
                }
                for n in scenario.nodes
            ],
        },
    }


def scenario_from_dict(data: dict) -> Scenario:
    """Inverse of scenario_to_dict(); also accepts a full run configuration with a node list."""
    config = parse_config(data)
    if config.nodes is None:
        raise ConfigError("scenario.nodes", "scenario file needs an explicit node list")
    return config.scenario()
