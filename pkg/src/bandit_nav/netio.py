"""File formats: network CSV, scenario config JSON, trace/summary output.

All outputs are plain CSV (diff-able, plot-friendly, desk-scale sizes) and
floats are written with repr so a round trip preserves values exactly.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from .energy import MODEL_KINDS, MODEL_RECT, BeliefState, VehicleParams
from .environment import GT_GAUSSIAN, SCENARIO_KINDS, GroundTruth
from .errors import ValidationError
from .graph import EdgeAttributes, RoadGraph
from .simulator import RegretTrace

logger = logging.getLogger(__name__)

NETWORK_REQUIRED = ("from_id", "to_id", "length_m", "incline_rad", "speed_limit_mps")
NETWORK_OPTIONAL = ("mean_speed_mps", "speed_var", "lat1", "lon1", "lat2", "lon2")
NETWORK_COLUMNS = NETWORK_REQUIRED + NETWORK_OPTIONAL

TRACE_COLUMNS = ("run_id", "scenario", "policy", "agent", "t", "path_hash", "instant_regret", "cumulative_regret")
SUMMARY_COLUMNS = ("policy", "scenario", "K", "avg_final_regret", "sd_final_regret", "n_runs")
GROUND_TRUTH_COLUMNS = ("edge_id", "from_id", "to_id", "theta_star", "noise_var", "prior_mu", "prior_var")


def bundled_network_path(name: str = "toy_city.csv") -> FsPath:
    """Path of a network file shipped with the package."""
    return FsPath(str(resources.files("bandit_nav").joinpath("data", name)))


# ---------------------------------------------------------------------------
# Network files
# ---------------------------------------------------------------------------


def _parse_float(row: dict, column: str, line: int, required: bool) -> float | None:
    raw = (row.get(column) or "").strip()
    if not raw:
        if required:
            raise ValidationError(f"line {line}: column {column!r} is empty")
        return None
    try:
        return float(raw)
    except ValueError as err:
        raise ValidationError(f"line {line}: column {column!r}: {err}") from None


def load_network(path, validate: bool = True) -> RoadGraph:
    """Parse a network CSV into a RoadGraph with dense integer ids.

    String vertex ids are mapped to dense integers in order of first
    appearance and retained as labels for output.
    """
    path = FsPath(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in NETWORK_REQUIRED if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing required columns {missing}")
        unknown = [c for c in header if c not in NETWORK_COLUMNS]
        if unknown:
            raise ValidationError(f"{path}: unknown columns {unknown}")

        labels: list[str] = []
        label_to_id: dict[str, int] = {}
        edges: list[tuple[int, int, EdgeAttributes]] = []
        seen_pairs: set[tuple[int, int]] = set()

        def vid(label: str) -> int:
            if label not in label_to_id:
                label_to_id[label] = len(labels)
                labels.append(label)
            return label_to_id[label]

        for line, row in enumerate(reader, start=2):
            u = vid(str(row["from_id"]).strip())
            v = vid(str(row["to_id"]).strip())
            attrs = EdgeAttributes(
                length_m=_parse_float(row, "length_m", line, True),
                incline_rad=_parse_float(row, "incline_rad", line, True),
                speed_limit_mps=_parse_float(row, "speed_limit_mps", line, True),
                mean_speed_mps=_parse_float(row, "mean_speed_mps", line, False),
                speed_var=_parse_float(row, "speed_var", line, False),
                lat1=_parse_float(row, "lat1", line, False),
                lon1=_parse_float(row, "lon1", line, False),
                lat2=_parse_float(row, "lat2", line, False),
                lon2=_parse_float(row, "lon2", line, False),
            )
            if (u, v) in seen_pairs:
                logger.warning("%s line %d: duplicate edge %s -> %s", path, line, row["from_id"], row["to_id"])
            seen_pairs.add((u, v))
            edges.append((u, v, attrs))

    if not edges:
        raise ValidationError(f"{path}: no edges")
    return RoadGraph(len(labels), edges, vertex_labels=labels, validate=validate)


def save_network(graph: RoadGraph, path) -> None:
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(NETWORK_COLUMNS)
        for eid in range(graph.n_edges):
            u, v = graph.endpoints(eid)
            a = graph.attributes(eid)
            row = [graph.label(u), graph.label(v), repr(a.length_m), repr(a.incline_rad), repr(a.speed_limit_mps)]
            for value in (a.mean_speed_mps, a.speed_var, a.lat1, a.lon1, a.lat2, a.lon2):
                row.append("" if value is None else repr(value))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Ground-truth files (synthetic instances)
# ---------------------------------------------------------------------------


def save_ground_truth(graph: RoadGraph, gt: GroundTruth, belief: BeliefState, path) -> None:
    if gt.kind != GT_GAUSSIAN or belief.kind != MODEL_RECT:
        raise ValidationError("only Gaussian ground truth files are supported")
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for eid in range(graph.n_edges):
            u, v = graph.endpoints(eid)
            writer.writerow(
                [
                    eid,
                    graph.label(u),
                    graph.label(v),
                    repr(float(gt.theta_star[eid])),
                    repr(float(gt.sigma[eid] ** 2)),
                    repr(float(belief.mu[eid])),
                    repr(float(belief.var[eid])),
                ]
            )


def load_ground_truth(path, graph: RoadGraph) -> tuple[GroundTruth, BeliefState]:
    path = FsPath(path)
    theta = np.empty(graph.n_edges)
    noise_var = np.empty(graph.n_edges)
    mu0 = np.empty(graph.n_edges)
    var0 = np.empty(graph.n_edges)
    seen = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in GROUND_TRUTH_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        for line, row in enumerate(reader, start=2):
            eid = int(row["edge_id"])
            if not 0 <= eid < graph.n_edges:
                raise ValidationError(f"{path} line {line}: edge id {eid} outside the graph")
            theta[eid] = float(row["theta_star"])
            noise_var[eid] = float(row["noise_var"])
            mu0[eid] = float(row["prior_mu"])
            var0[eid] = float(row["prior_var"])
            seen += 1
    if seen != graph.n_edges:
        raise ValidationError(f"{path}: {seen} rows for a graph with {graph.n_edges} edges")
    gt = GroundTruth(kind=GT_GAUSSIAN, theta_star=theta, sigma=np.sqrt(noise_var))
    return gt, BeliefState.gaussian(mu0, var0, noise_var)


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

SCENARIO_SYNTHETIC = "synthetic"
CONFIG_SCENARIOS = SCENARIO_KINDS + (SCENARIO_SYNTHETIC,)

_CONFIG_KEYS = {
    "scenario",
    "policies",
    "model",
    "T",
    "K",
    "B",
    "seeds",
    "source",
    "target",
    "theta_factor",
    "noise_factor",
    "vehicle",
    "ground_truth",
    "output_dir",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated experiment configuration; unknown keys are rejected."""

    scenario: str
    T: int
    source: int | str
    target: int | str
    policies: tuple[str, ...] = ("ts",)
    model: str = MODEL_RECT
    K: int = 1
    B: int | None = None
    seeds: tuple[int, ...] = (0,)
    theta_factor: float = 0.25
    noise_factor: float = 0.1
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    ground_truth: str | None = None
    output_dir: str = "out"

    def validate(self) -> "ScenarioConfig":
        from .policies import make_policy

        if self.scenario not in CONFIG_SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}, expected one of {CONFIG_SCENARIOS}")
        if self.model not in MODEL_KINDS:
            raise ValidationError(f"unknown model {self.model!r}")
        if self.T < 1:
            raise ValidationError(f"T must be >= 1, got {self.T}")
        if self.K < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if not self.policies:
            raise ValidationError("at least one policy is required")
        for name in self.policies:
            make_policy(name)
            if name in ("batched-ts", "qpm-d-ts") and self.T % self.K:
                raise ValidationError(f"policy {name!r} needs K={self.K} to divide T={self.T}")
        if self.B is not None and self.B * self.K != self.T:
            raise ValidationError(f"B*K must equal T, got {self.B}*{self.K} != {self.T}")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ValidationError("seeds must be >= 0")
        seen: list[int] = []
        for s in self.seeds:
            if s in seen:
                logger.warning("duplicate seed %d dropped", s)
            else:
                seen.append(s)
        if self.theta_factor <= 0 or self.noise_factor <= 0:
            raise ValidationError("theta_factor and noise_factor must be > 0")
        if self.scenario == SCENARIO_SYNTHETIC and not self.ground_truth:
            raise ValidationError("synthetic scenario needs a ground_truth file")
        if str(self.source) == str(self.target):
            raise ValidationError("source and target must differ")
        return replace(self, seeds=tuple(seen))

    def to_json(self) -> str:
        data = asdict(self)
        data["policies"] = list(self.policies)
        data["seeds"] = list(self.seeds)
        return json.dumps(data, indent=2, sort_keys=True)


def config_from_dict(data: dict) -> ScenarioConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("scenario", "T", "source", "target"):
        if key not in data:
            raise ValidationError(f"config is missing required key {key!r}")
    kwargs = dict(data)
    if "policies" in kwargs:
        kwargs["policies"] = tuple(kwargs["policies"])
    if "seeds" in kwargs:
        kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
    if "vehicle" in kwargs:
        vehicle = kwargs["vehicle"]
        if not isinstance(vehicle, dict):
            raise ValidationError("vehicle must be an object of parameter values")
        unknown = set(vehicle) - set(VehicleParams.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown vehicle keys: {sorted(unknown)}")
        kwargs["vehicle"] = VehicleParams(**vehicle)
    return ScenarioConfig(**kwargs).validate()


def load_config(path) -> ScenarioConfig:
    path = FsPath(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: {err}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Trace output
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_trace_csv(trace: RegretTrace, path) -> None:
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows():
            writer.writerow([_fmt(x) for x in row])


def write_paths_csv(trace: RegretTrace, path) -> None:
    """Sidecar mapping path_hash to the edge-id sequence (heat maps need it)."""
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("path_hash", "edge_ids"))
        for h, edges in sorted(trace.path_table().items()):
            writer.writerow((h, "|".join(str(e) for e in edges)))


def write_summary_csv(rows: list[dict], path) -> None:
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
