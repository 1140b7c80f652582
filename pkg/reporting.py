"""
LOFT v1.0 - Reporting
Plot-ready CSV/JSON outputs and the run manifest.

Rules shared by every file:
  - CSV files start with a header row; floats use 17 significant digits
  - JSON files carry "schema_version"; inf/NaN are written as null
  - no wall-clock values in CSV/JSON, so reruns are byte-identical
    (the manifest's timestamp is the one exception)
"""

import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from config_loader import SCHEMA_VERSION
from harness import METHODS, MonteCarloSummary
from lifetime_graph import LifetimeGraph
from model import Scenario
from optimizer import OptimizerTrace
from utils.logger import get_logger

log = get_logger(__name__)

VERSION = "1.0"


def fmt_float(value: float) -> str:
    """Round-trip exact text form of a float."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV with a header row."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    log.info("Wrote %s", path)
    return path


def write_json(path: Path, payload: dict) -> Path:
    """Write a JSON document with schema_version first."""
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema_version": SCHEMA_VERSION, **{k: v for k, v in payload.items() if k != "schema_version"}}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(document), f, indent=2, allow_nan=False)
        f.write("\n")
    log.info("Wrote %s", path)
    return path


# ====================================================================== #
# Optimizer outputs
# ====================================================================== #

TRACE_HEADER = ("iteration", "node_id", "x", "y", "z", "lambda2", "lifetime", "step",
                "grad_norm", "backtracks", "degenerate", "projection_events")


def write_trace_csv(path: Path, trace: OptimizerTrace) -> Path:
    """One row per (iteration, movable node)."""
    rows = (
        (r.iteration, node_id, p.x, p.y, p.z, r.lambda2, r.lifetime, r.step,
         r.grad_norm, r.backtracks, r.degenerate, ";".join(r.projection_events))
        for r in trace.records
        for node_id, p in r.positions.items()
    )
    return write_csv(path, TRACE_HEADER, rows)


def write_graph_csv(path: Path, graph: LifetimeGraph) -> Path:
    """Directed edge list of a lifetime graph."""
    rows = (
        (e.tx, e.rx, e.link_type.value, e.budget.distance, e.budget.required_power, e.weight)
        for e in graph.edges
    )
    return write_csv(path, ("tx", "rx", "link_type", "distance_m", "required_power_w", "lifetime_s"), rows)


def trace_summary(trace: OptimizerTrace, scenario: Scenario) -> dict:
    """
    Headline figures of one optimizer run.

    best_* describe the returned (best-lifetime) placement, last_* the final
    accepted iterate; they differ after a surrogate-gap event.
    """
    leader = scenario.leader.position
    return {
        "stage": trace.stage,
        "stop_reason": trace.stop_reason,
        "hit_max_iterations": trace.hit_max_iterations,
        "iterations": trace.iterations,
        "best_iteration": trace.best_iteration,
        "surrogate_gap_events": trace.surrogate_gap_events,
        "initial_lambda2": trace.initial.lambda2,
        "initial_lifetime_s": trace.initial.lifetime,
        "best_lambda2": trace.best.lambda2,
        "best_lifetime_s": trace.best.lifetime,
        "last_lambda2": trace.final.lambda2,
        "last_lifetime_s": trace.final.lifetime,
        "bottleneck_edge": list(trace.bottleneck) if trace.bottleneck else None,
        "leader_position": [leader.x, leader.y, leader.z],
        "leader_in_corridor": leader.z >= scenario.constraints.h_min - 1e-6,
    }


# ====================================================================== #
# Monte Carlo outputs
# ====================================================================== #

def write_trials_csv(path: Path, summary: MonteCarloSummary) -> Path:
    """One row per trial; methods of an infeasible trial are left empty."""
    header = ["trial", "feasible", "initial_lifetime", "initial_lambda2"]
    for method in METHODS:
        header += [f"{method}_lifetime", f"{method}_lambda2", f"{method}_iterations"]

    def row(result) -> list:
        cells: list = [result.trial, result.feasible, result.initial_lifetime, result.initial_lambda2]
        for method in METHODS:
            outcome = result.methods.get(method)
            cells += ["", "", ""] if outcome is None else [outcome.lifetime, outcome.lambda2, outcome.iterations]
        return cells

    return write_csv(path, header, (row(r) for r in summary.results))


# ====================================================================== #
# Manifest
# ====================================================================== #

@dataclass
class RunManifest:
    """Everything needed to repeat a run: command line, seed and the parsed configuration."""
    command: str
    config_path: str | None
    seed: int
    output_dir: str
    argv: list[str] = field(default_factory=lambda: list(sys.argv[1:]))
    version: str = VERSION
    config: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def write(self, out_dir: Path) -> Path:
        return write_json(out_dir / "manifest.json", asdict(self))
