"""Experiment orchestration: instances, run cells, and config-driven sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import netio
from .energy import BeliefState
from .environment import (
    SCENARIO_CORRELATED,
    SCENARIO_KNOWN_PRIOR,
    SCENARIO_MISSPECIFIED,
    GroundTruth,
    build_correlated,
    build_known_prior,
    build_misspecified,
    prior_beliefs,
)
from .errors import ValidationError
from .graph import RoadGraph
from .netio import SCENARIO_SYNTHETIC, ScenarioConfig
from .policies import agent_label, make_policy
from .simulator import RegretTrace, TraceMeta, instance_stream, run_batched, run_delayed, run_fleet, run_single

logger = logging.getLogger(__name__)


def make_instance(graph: RoadGraph, config: ScenarioConfig, seed: int) -> tuple[GroundTruth, BeliefState]:
    """Ground truth plus fresh agent prior for one (config, seed) cell.

    Instance draws are keyed by the seed alone, so every policy in a sweep
    faces the same ground truth for a given seed.
    """
    if config.scenario == SCENARIO_MISSPECIFIED:
        return build_misspecified(graph, config.vehicle, config.theta_factor, config.noise_factor, config.model)
    prior = prior_beliefs(graph, config.vehicle, config.theta_factor, config.noise_factor, config.model)
    if config.scenario == SCENARIO_KNOWN_PRIOR:
        return build_known_prior(graph, prior, instance_stream((seed,))), prior
    if config.scenario == SCENARIO_CORRELATED:
        return build_correlated(graph, prior, instance_stream((seed,))), prior
    if config.scenario == SCENARIO_SYNTHETIC:
        return netio.load_ground_truth(config.ground_truth, graph)
    raise ValidationError(f"unknown scenario {config.scenario!r}")


def run_cell(graph: RoadGraph, config: ScenarioConfig, policy_name: str, seed: int) -> RegretTrace:
    """One run: build the instance, dispatch the matching loop, label the trace.

    K is the fleet size for plain policies, the batch size for batched-ts,
    and the feedback delay for qpm-d-ts.
    """
    gt, belief = make_instance(graph, config, seed)
    policy = make_policy(policy_name)
    source = graph.vertex_id(config.source)
    target = graph.vertex_id(config.target)
    key = (seed,)
    if policy_name == "batched-ts":
        trace = run_batched(graph, gt, belief, policy, config.T, config.K, key, source, target, config.scenario)
    elif policy_name == "qpm-d-ts":
        trace = run_delayed(graph, gt, belief, policy, config.T, config.K, key, source, target, config.scenario)
    elif config.K > 1:
        trace = run_fleet(graph, gt, belief, policy, config.T, config.K, key, source, target, config.scenario)
    else:
        trace = run_single(graph, gt, belief, policy, config.T, key, source, target, config.scenario)

    label = agent_label(config.model, policy_name)
    run_id = f"{config.scenario}_{config.model}_{policy_name}_K{config.K}_seed{seed}"
    trace.meta = TraceMeta(run_id, config.scenario, label, seed, config.T, config.K)
    return trace


@dataclass
class SweepResult:
    trace_files: dict[tuple[str, int], FsPath]
    summary_rows: list[dict]
    summary_file: FsPath
    failures: list[tuple[str, int, str]]


def _cell_worker(args) -> tuple[str, int, float, str]:
    network_path, config, policy_name, seed = args
    graph = netio.load_network(network_path)
    trace = run_cell(graph, config, policy_name, seed)
    out = FsPath(config.output_dir)
    netio.write_trace_csv(trace, out / f"{trace.meta.run_id}.csv")
    netio.write_paths_csv(trace, out / f"{trace.meta.run_id}_paths.csv")
    return policy_name, seed, trace.mean_final_regret(), trace.meta.run_id


def sweep(graph: RoadGraph, config: ScenarioConfig, jobs: int = 1, network_path=None) -> SweepResult:
    """Run the policies x seeds grid, write one trace CSV per cell plus a
    summary table of final-regret mean and sample SD per policy.

    Cell failures are logged and skipped; the remaining grid still runs.
    Parallel execution (jobs > 1) requires ``network_path`` so workers can
    reload the graph.
    """
    out = FsPath(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.json").write_text(config.to_json(), encoding="utf-8")

    cells = [(p, s) for p in config.policies for s in config.seeds]
    finals: dict[tuple[str, int], float] = {}
    files: dict[tuple[str, int], FsPath] = {}
    failures: list[tuple[str, int, str]] = []

    if jobs > 1 and network_path is not None:
        tasks = [(network_path, config, p, s) for p, s in cells]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (p, s), outcome in zip(cells, pool.map(_run_safely, tasks)):
                if isinstance(outcome, str):
                    logger.error("cell (%s, seed %d) failed: %s", p, s, outcome)
                    failures.append((p, s, outcome))
                else:
                    finals[(p, s)] = outcome[2]
                    files[(p, s)] = out / f"{outcome[3]}.csv"
    else:
        for p, s in cells:
            try:
                trace = run_cell(graph, config, p, s)
            except Exception as err:
                logger.error("cell (%s, seed %d) failed: %s", p, s, err)
                failures.append((p, s, str(err)))
                continue
            path = out / f"{trace.meta.run_id}.csv"
            netio.write_trace_csv(trace, path)
            netio.write_paths_csv(trace, out / f"{trace.meta.run_id}_paths.csv")
            finals[(p, s)] = trace.mean_final_regret()
            files[(p, s)] = path

    rows = []
    for p in config.policies:
        values = [finals[(p, s)] for s in config.seeds if (p, s) in finals]
        if not values:
            continue
        rows.append(
            {
                "policy": agent_label(config.model, p),
                "scenario": config.scenario,
                "K": config.K,
                "avg_final_regret": float(np.mean(values)),
                "sd_final_regret": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
                "n_runs": len(values),
            }
        )
    summary_file = out / "summary.csv"
    netio.write_summary_csv(rows, summary_file)
    return SweepResult(trace_files=files, summary_rows=rows, summary_file=summary_file, failures=failures)


def _run_safely(args):
    try:
        return _cell_worker(args)
    except Exception as err:  # worker boundary: report, do not kill the pool
        return str(err)
