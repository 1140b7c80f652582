"""
LOFT v1.0 - Lifetime-Optimal Flight Topology
Main entry point.

Commands:
  optimize           stage-1 placement of gathering UAVs and leader
  montecarlo         paired baseline / fixed / corridor / free comparison
  validate-gradient  analytic ∂λ₂/∂position against central differences
  backhaul           stage-2 relay placement between leader and BS
  two-stage          stage 1 followed by stage 2
  validate           lint the configured scenario

Exit codes:
  0 success · 1 configuration or usage error · 2 infeasible initial placement
  3 gradient check above tolerance
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from config_loader import RunConfig, load_config, scenario_to_dict
from errors import ConfigError, ConstraintError, LoftError
from gradient import compare_gradients, fd_gradient_oracle, lambda2_gradient
from harness import monte_carlo
from lifetime_graph import EdgePolicy, build_backhaul_graph, build_graph, network_lifetime
from model import Scenario, validate
from optimizer import LeaderMode, optimize_stage1, optimize_stage2_backhaul, optimize_two_stage
from reporting import (VERSION, RunManifest, trace_summary, write_graph_csv, write_json,
                       write_trace_csv, write_trials_csv)
from spectral import graph_lambda2
from utils.logger import configure_logging, get_logger

log = get_logger("LOFT")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONSTRAINT = 2
EXIT_GRADIENT = 3


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 so that 2 stays reserved for infeasible placements."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loft", description="UAV placement for maximum data-gathering network lifetime")
    parser.add_argument("--version", action="version", version=f"LOFT {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", type=Path, help="Path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config)")
        return p

    modes = [m.value for m in LeaderMode]

    p = command("optimize", "Stage-1 placement")
    p.add_argument("--mode", choices=modes, default=LeaderMode.CORRIDOR.value)
    p.add_argument("--out", type=Path, default=Path("out/optimize"))

    p = command("montecarlo", "Monte Carlo lifetime comparison")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="Worker processes")
    p.add_argument("--progress", action="store_true", help="Show a progress bar")
    p.add_argument("--out", type=Path, default=Path("out/montecarlo"))

    p = command("validate-gradient", "Check the analytic gradient against finite differences")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--step", type=float, default=None, help="Finite-difference step (m)")

    p = command("backhaul", "Stage-2 relay placement")
    p.add_argument("--relays", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("out/backhaul"))

    p = command("two-stage", "Stage 1 then stage 2")
    p.add_argument("--mode", choices=modes, default=LeaderMode.CORRIDOR.value)
    p.add_argument("--relays", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("out/two-stage"))

    command("validate", "Lint the configured scenario")
    return parser


# ====================================================================== #
# Helpers
# ====================================================================== #

def _checked_scenario(config: RunConfig, require_bs: bool = False) -> Scenario:
    """Configured scenario, or ConfigError naming the first violated field."""
    scenario = config.scenario()
    violations = validate(scenario, require_pairing=config.optimizer.edge_policy is EdgePolicy.TWO_HOP_PAIRED)
    if violations:
        for v in violations:
            print(f"  {v}", file=sys.stderr)
        first = violations[0]
        raise ConfigError(first.field, first.message)
    if require_bs and scenario.base_station is None:
        raise ConfigError("bs", "configuration has no base station (scenario.base_station)")
    return scenario


def _manifest(args: argparse.Namespace, config: RunConfig, out_dir: Path) -> None:
    RunManifest(
        command=args.command,
        config_path=str(args.config),
        seed=config.seed,
        output_dir=str(out_dir),
        config=config.raw,
    ).write(out_dir)


# ====================================================================== #
# Commands
# ====================================================================== #

def cmd_optimize(args: argparse.Namespace, config: RunConfig) -> int:
    scenario = _checked_scenario(config)
    mode = LeaderMode(args.mode)
    final, trace = optimize_stage1(scenario, mode, config.optimizer)

    out = args.out
    write_trace_csv(out / "trace.csv", trace)
    write_json(out / "scenario.json", scenario_to_dict(final))
    write_json(out / "summary.json", {"command": "optimize", "mode": mode.value, **trace_summary(trace, final)})
    write_graph_csv(out / "graph.csv", build_graph(final, config.optimizer.edge_policy))
    _manifest(args, config, out)

    print(f"{mode.value}: λ₂ {trace.initial.lambda2:.6g} → {trace.best.lambda2:.6g}, "
          f"lifetime {trace.initial.lifetime:.6g} → {trace.best.lifetime:.6g} s "
          f"({trace.iterations} iterations, {trace.stop_reason})")
    return EXIT_OK


def cmd_montecarlo(args: argparse.Namespace, config: RunConfig) -> int:
    trials = args.trials if args.trials is not None else config.trials
    jobs = args.jobs if args.jobs is not None else config.jobs
    if trials < 2:
        raise ConfigError("montecarlo.trials", f"need at least 2 trials, got {trials}")
    if jobs < 1:
        raise ConfigError("montecarlo.jobs", f"need at least 1 job, got {jobs}")

    summary = monte_carlo(config.generator, config.optimizer, trials, seed=config.seed,
                          jobs=jobs, progress=args.progress or config.progress)

    out = args.out
    write_json(out / "aggregate.json", summary.to_dict())
    write_trials_csv(out / "trials.csv", summary)
    _manifest(args, config, out)

    for name, s in summary.methods.items():
        print(f"{name:<9} {s.mean:14.6g} s ± {s.half_width:.3g}  (n = {s.count})")
    if summary.excluded:
        print(f"excluded trials: {summary.excluded}")
    return EXIT_OK


def cmd_validate_gradient(args: argparse.Namespace, config: RunConfig) -> int:
    samples = args.samples if args.samples is not None else config.gradient_samples
    step = args.step if args.step is not None else config.gradient_step
    if samples < 1:
        raise ConfigError("gradient_check.samples", f"need at least 1 sample, got {samples}")
    if not step > 0:
        raise ConfigError("gradient_check.step", f"must be > 0, got {step}")

    policy = config.optimizer.edge_policy
    seeds = np.random.SeedSequence(config.seed).spawn(samples)
    if config.nodes is not None:
        log.info("validate-gradient samples the scenario generator; the explicit node list is not used")
    worst = (0.0, -1, "", "")
    skipped = 0
    for i, child in enumerate(seeds):
        scenario = config.sampled_scenario(child)
        movable = [u.node_id for u in scenario.uavs] + [scenario.leader.node_id]
        graph = build_graph(scenario, policy)
        spectral = graph_lambda2(graph)
        oracle = fd_gradient_oracle(scenario, movable, step, builder=lambda s: build_graph(s, policy))
        if oracle.unreliable:
            skipped += 1
            continue
        error, node_id, axis = compare_gradients(lambda2_gradient(graph, spectral, movable), oracle)
        log.debug("Sample %d: relative error %.3e (%s.%s)", i, error, node_id, axis)
        if error > worst[0]:
            worst = (error, i, node_id, axis)

    error, sample, node_id, axis = worst
    print(f"max relative error: {error:.3e} over {samples - skipped} samples "
          f"({skipped} degenerate skipped), tolerance {config.gradient_tolerance:.1e}")
    if error > config.gradient_tolerance:
        print(f"worst coordinate: sample {sample}, node {node_id}, axis {axis}", file=sys.stderr)
        return EXIT_GRADIENT
    return EXIT_OK


def cmd_backhaul(args: argparse.Namespace, config: RunConfig) -> int:
    scenario = _checked_scenario(config, require_bs=True)
    relays = args.relays if args.relays is not None else config.relays
    final, trace = optimize_stage2_backhaul(scenario, relays, config.optimizer)

    out = args.out
    write_trace_csv(out / "backhaul_trace.csv", trace)
    write_json(out / "scenario.json", scenario_to_dict(final))
    write_json(out / "summary.json", {"command": "backhaul", "relays": relays, **trace_summary(trace, final)})
    write_graph_csv(out / "graph.csv", build_backhaul_graph(final))
    _manifest(args, config, out)

    print(f"{relays} relays: backhaul lifetime {trace.initial.lifetime:.6g} → {trace.best.lifetime:.6g} s "
          f"({trace.iterations} iterations, {trace.stop_reason})")
    return EXIT_OK


def cmd_two_stage(args: argparse.Namespace, config: RunConfig) -> int:
    scenario = _checked_scenario(config, require_bs=True)
    relays = args.relays if args.relays is not None else config.relays
    mode = LeaderMode(args.mode)
    result = optimize_two_stage(scenario, mode, relays, config.optimizer)

    out = args.out
    write_trace_csv(out / "stage1_trace.csv", result.stage1)
    write_trace_csv(out / "stage2_trace.csv", result.stage2)
    write_json(out / "scenario.json", scenario_to_dict(result.scenario))
    write_json(out / "summary.json", {
        "command": "two-stage",
        "mode": mode.value,
        "relays": relays,
        "gathering_lifetime_s": network_lifetime(build_graph(result.scenario, config.optimizer.edge_policy)),
        "backhaul_lifetime_s": network_lifetime(build_backhaul_graph(result.scenario)),
        "stage1": trace_summary(result.stage1, result.scenario),
        "stage2": trace_summary(result.stage2, result.scenario),
    })
    _manifest(args, config, out)

    print(f"stage 1 lifetime {result.stage1.best.lifetime:.6g} s, "
          f"stage 2 lifetime {result.stage2.best.lifetime:.6g} s")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:
    scenario = config.scenario()
    violations = validate(scenario, require_pairing=config.optimizer.edge_policy is EdgePolicy.TWO_HOP_PAIRED)
    for v in violations:
        print(f"{v.code}\t{v.field}\t{v.node_id or '-'}\t{v.message}")
    if violations:
        return EXIT_CONFIG
    print(f"OK: {len(scenario.nodes)} nodes, no violations")
    return EXIT_OK


_COMMANDS = {
    "optimize": cmd_optimize,
    "montecarlo": cmd_montecarlo,
    "validate-gradient": cmd_validate_gradient,
    "backhaul": cmd_backhaul,
    "two-stage": cmd_two_stage,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed", f"must be >= 0, got {args.seed}")
            config = config.with_seed(args.seed)
        configure_logging(config.log_level, config.log_file)
        log.info("LOFT v%s: %s (%s, seed %d)", VERSION, args.command, args.config, config.seed)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintError as exc:
        print(f"constraint error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except LoftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
