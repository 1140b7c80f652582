"""
LOFT v1.0 - Monte Carlo Harness
Random scenarios, the middle-plane baseline and paired lifetime comparison.

Per trial (one SeedSequence child each):
  generate_scenario → baseline_placement → lifetime of the baseline
                                         → optimize_stage1 (fixed / corridor / free)
All three optimizer runs start from the baseline placement, so every method
of a trial is compared on the same network.

Aggregates are mean ± 1.96·s/√n over the feasible trials.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from errors import ConfigError, ScenarioGenerationError
from lifetime_graph import build_graph, network_lifetime
from model import ChannelParams, Constraints, EnergyParams, Node, NodeRole, Position3D, Scenario
from optimizer import LeaderMode, OptimizerConfig, optimize_stage1, project_constraints
from spectral import graph_lambda2
from trial_executor import TrialExecutor, TrialTask
from utils.logger import get_logger
from utils.timing import PerformanceTimer, timed

log = get_logger(__name__)

METHODS = ("baseline", "fixed", "corridor", "free")
CI_Z = 1.96
MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class ScenarioGenConfig:
    """Random scenario layout; ``seed`` may be an int or a SeedSequence."""
    x_range: tuple[float, float] = (0.0, 100.0)
    y_range: tuple[float, float] = (-10.0, 40.0)
    n_uavs: int = 5
    n_chs: int = 5
    n_jammers: int = 4
    uav_altitude: tuple[float, float] = (10.0, 60.0)
    seed: Any = 0
    base_station: Position3D | None = None
    channel: ChannelParams = field(default_factory=ChannelParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    constraints: Constraints = field(default_factory=Constraints)

    def check(self) -> None:
        """Raise ConfigError on the first invalid field."""
        if not self.x_range[1] > self.x_range[0]:
            raise ConfigError("scenario.region.x", f"empty range {self.x_range}")
        if not self.y_range[1] > self.y_range[0]:
            raise ConfigError("scenario.region.y", f"empty range {self.y_range}")
        for name in ("n_uavs", "n_chs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"scenario.{name}", f"must be >= 1, got {getattr(self, name)}")
        if self.n_jammers < 0:
            raise ConfigError("scenario.n_jammers", f"must be >= 0, got {self.n_jammers}")
        low, high = self.uav_altitude
        if not 0.0 <= low <= high:
            raise ConfigError("scenario.uav_altitude", f"need 0 <= low <= high, got {self.uav_altitude}")


def reference_generator(seed: Any = 0, narrowband: bool = False) -> ScenarioGenConfig:
    """5 UAVs, 5 CHs, 4 jammers on [0,100]×[−10,40] with the reference channel."""
    return ScenarioGenConfig(seed=seed, channel=ChannelParams.reference(narrowband))


# ====================================================================== #
# Scenarios
# ====================================================================== #

def _bbox_center(points: list[Position3D]) -> tuple[float, float]:
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return 0.5 * (min(xs) + max(xs)), 0.5 * (min(ys) + max(ys))


def generate_scenario(config: ScenarioGenConfig) -> Scenario:
    """
    Draw a random scenario.

    CHs and jammers are uniform on the region at z = 0; UAVs are uniform on
    the region within the altitude band, each re-drawn until it keeps d_min
    from the UAVs already placed. The leader starts at the centre of the
    bounding rectangle of all those nodes, at z = h_min.

    Raises:
        ConfigError: invalid layout.
        ScenarioGenerationError: a UAV could not be placed in 1000 draws.
    """
    config.check()
    rng = np.random.default_rng(config.seed)
    (x0, x1), (y0, y1) = config.x_range, config.y_range

    def ground(count: int) -> np.ndarray:
        return np.column_stack([rng.uniform(x0, x1, count), rng.uniform(y0, y1, count)])

    chs = [Node(f"CH{i + 1}", NodeRole.CLUSTER_HEAD, Position3D(float(x), float(y)))
           for i, (x, y) in enumerate(ground(config.n_chs))]
    jammers = [Node(f"J{i + 1}", NodeRole.JAMMER, Position3D(float(x), float(y)))
               for i, (x, y) in enumerate(ground(config.n_jammers))]

    low, high = config.uav_altitude
    d_min = config.constraints.d_min
    placed: list[np.ndarray] = []
    for i in range(config.n_uavs):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            candidate = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(low, high)])
            if all(np.linalg.norm(candidate - other) >= d_min for other in placed):
                placed.append(candidate)
                break
        else:
            raise ScenarioGenerationError(
                f"could not place UAV {i + 1} with d_min = {d_min} m after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    uavs = [Node(f"U{i + 1}", NodeRole.GATHERING_UAV, Position3D.from_array(p)) for i, p in enumerate(placed)]

    cx, cy = _bbox_center([n.position for n in chs + jammers + uavs])
    leader = Node("L", NodeRole.LEADER, Position3D(cx, cy, config.constraints.h_min))

    nodes = chs + uavs + [leader] + jammers
    if config.base_station is not None:
        nodes.append(Node("BS", NodeRole.BASE_STATION, config.base_station))

    return Scenario(
        nodes=tuple(nodes),
        channel=config.channel,
        energy=config.energy,
        constraints=config.constraints,
    )


def baseline_placement(scenario: Scenario) -> Scenario:
    """
    Middle-plane baseline: UAVs at h_min/2 keeping their xy, leader at the
    centre of the bounding rectangle of CHs, jammers and UAVs at z = h_min.

    UAVs that end up closer than d_min after flattening are separated.
    """
    h_min = scenario.constraints.h_min
    uavs = {u.node_id: Position3D(u.position.x, u.position.y, h_min / 2.0) for u in scenario.uavs}
    ground_and_air = [n.position for n in scenario.cluster_heads + scenario.jammers + scenario.uavs]
    cx, cy = _bbox_center(ground_and_air)

    projection = project_constraints(uavs, scenario.constraints, LeaderMode.FIXED)
    positions = dict(projection.positions)
    positions[scenario.leader.node_id] = Position3D(cx, cy, h_min)
    return scenario.with_positions(positions)


# ====================================================================== #
# Trials
# ====================================================================== #

@dataclass
class MethodResult:
    """Outcome of one placement method in one trial."""
    lifetime: float
    lambda2: float
    iterations: int = 0
    stop_reason: str = ""
    leader_in_corridor: bool = True
    wall_time_ms: float = 0.0


@dataclass
class TrialResult:
    """
    All methods of one trial. initial_* describe the generated placement
    before the baseline rule is applied.
    """
    trial: int
    feasible: bool
    initial_lifetime: float
    initial_lambda2: float
    methods: dict[str, MethodResult] = field(default_factory=dict)

    def lifetime(self, method: str) -> float:
        return self.methods[method].lifetime


def run_trial(trial: int, gen_config: ScenarioGenConfig, opt_config: OptimizerConfig) -> TrialResult:
    """Generate one scenario and evaluate every method on it (module level for pickling)."""
    timer = PerformanceTimer()
    scenario = generate_scenario(gen_config)

    graph = build_graph(scenario, opt_config.edge_policy)
    initial_lifetime = network_lifetime(graph)
    initial_lambda2 = graph_lambda2(graph).lambda2

    with timer.measure("baseline"):
        baseline = baseline_placement(scenario)
        base_graph = build_graph(baseline, opt_config.edge_policy)
        base_lifetime = network_lifetime(base_graph)
        base_lambda2 = graph_lambda2(base_graph).lambda2

    result = TrialResult(
        trial=trial,
        feasible=base_lifetime > 0.0,
        initial_lifetime=initial_lifetime,
        initial_lambda2=initial_lambda2,
    )
    result.methods["baseline"] = MethodResult(lifetime=base_lifetime, lambda2=base_lambda2)
    if not result.feasible:
        log.warning("Trial %d: required power infeasible, trial excluded", trial)
        return result

    h_min = scenario.constraints.h_min
    for mode in (LeaderMode.FIXED, LeaderMode.CORRIDOR, LeaderMode.FREE):
        with timer.measure(mode.value):
            final, trace = optimize_stage1(baseline, mode, opt_config)
        best = trace.best
        result.methods[mode.value] = MethodResult(
            lifetime=best.lifetime,
            lambda2=best.lambda2,
            iterations=trace.iterations,
            stop_reason=trace.stop_reason,
            leader_in_corridor=final.leader.position.z >= h_min - 1e-6,
        )

    metrics = timer.get_metrics()
    for method, outcome in result.methods.items():
        outcome.wall_time_ms = metrics.totals_ms.get(method, 0.0)

    if result.lifetime("free") < result.lifetime("corridor"):
        log.info("Trial %d: free leader ended below corridor leader (%.6g < %.6g s), local optimum",
                 trial, result.lifetime("free"), result.lifetime("corridor"))
    return result


# ====================================================================== #
# Aggregation
# ====================================================================== #

@dataclass(frozen=True)
class MethodSummary:
    """Mean lifetime with its normal-approximation 95% confidence half-width."""
    mean: float
    half_width: float
    std: float
    count: int


def summarize(values: list[float]) -> MethodSummary:
    """mean ± 1.96·s/√n with the sample standard deviation (n − 1)."""
    n = len(values)
    if n == 0:
        return MethodSummary(math.nan, math.nan, math.nan, 0)
    data = np.asarray(values, dtype=float)
    if n == 1:
        return MethodSummary(float(data[0]), math.nan, math.nan, 1)
    std = float(data.std(ddof=1))
    return MethodSummary(float(data.mean()), CI_Z * std / math.sqrt(n), std, n)


@dataclass
class MonteCarloSummary:
    """Aggregate of a Monte Carlo run; wall times stay out of to_dict()."""
    trials: int
    seed: int
    results: list[TrialResult]
    methods: dict[str, MethodSummary]
    excluded: int
    failed: int
    ordering_violations: int

    @property
    def included(self) -> int:
        return self.trials - self.excluded

    def to_dict(self) -> dict:
        def number(value: float) -> float | None:
            return None if math.isnan(value) else value

        return {
            "trials": self.trials,
            "seed": self.seed,
            "included": self.included,
            "excluded": self.excluded,
            "failed": self.failed,
            "free_below_corridor_trials": self.ordering_violations,
            "methods": {
                name: {
                    "mean_lifetime_s": number(s.mean),
                    "ci95_half_width_s": number(s.half_width),
                    "std_s": number(s.std),
                    "count": s.count,
                }
                for name, s in self.methods.items()
            },
        }


@timed("monte_carlo")
def monte_carlo(gen_config: ScenarioGenConfig, opt_config: OptimizerConfig, trials: int,
                seed: int = 0, jobs: int = 1, vary_seed: bool = True, progress: bool = False) -> MonteCarloSummary:
    """
    Paired Monte Carlo comparison of the baseline and the three leader modes.

    Args:
        gen_config: Scenario layout (its own seed is ignored).
        opt_config: Optimizer settings shared by all runs.
        trials: Number of trials (>= 2).
        seed: Master seed; trial i uses the i-th SeedSequence child.
        jobs: Worker processes.
        vary_seed: False gives every trial the master seed itself.
        progress: Show a progress bar.

    Returns:
        MonteCarloSummary over the feasible, successful trials.
    """
    if trials < 2:
        raise ConfigError("montecarlo.trials", f"need at least 2 trials, got {trials}")

    master = np.random.SeedSequence(seed)
    seeds = master.spawn(trials) if vary_seed else [np.random.SeedSequence(seed) for _ in range(trials)]
    tasks = [
        TrialTask(index=i, handler=run_trial, args=(i, replace(gen_config, seed=s), opt_config))
        for i, s in enumerate(seeds)
    ]

    log.info("Monte Carlo: %d trials, seed %d, %d jobs", trials, seed, jobs)
    executor = TrialExecutor(max_workers=jobs, progress=progress)
    outcomes = executor.run(tasks, desc="monte carlo")

    results = [o.result for o in outcomes if o.success]
    failed = sum(1 for o in outcomes if not o.success)
    feasible = [r for r in results if r.feasible]
    excluded = trials - len(feasible)

    methods = {m: summarize([r.lifetime(m) for r in feasible]) for m in METHODS}
    violations = sum(1 for r in feasible if r.lifetime("free") < r.lifetime("corridor"))

    if excluded:
        log.warning("Monte Carlo: %d of %d trials excluded (%d failed)", excluded, trials, failed)
    for name, s in methods.items():
        log.info("  %-8s mean lifetime %.6g s ± %.3g (n = %d)", name, s.mean, s.half_width, s.count)
    stats = executor.get_stats()
    log.debug("Trial executor: %d completed, %d failed, %.1f ms average",
              stats["completed_tasks"], stats["failed_tasks"], stats["avg_time_ms"])

    return MonteCarloSummary(
        trials=trials,
        seed=seed,
        results=results,
        methods=methods,
        excluded=excluded,
        failed=failed,
        ordering_violations=violations,
    )
