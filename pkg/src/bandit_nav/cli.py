"""Command-line entry point: run | sweep | gen-synth | validate."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from . import netio
from .errors import NoPathError, ValidationError
from .graph import validate_graph
from .harness import run_cell, sweep
from .synthgen import SynthSpec, generate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--network", required=True, help="network CSV file")
    parser.add_argument("--config", required=True, help="scenario config JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="single seed (overrides config)")
    parser.add_argument("--policy", help="single policy (overrides config)")
    parser.add_argument("--T", type=int, help="horizon (overrides config)")
    parser.add_argument("--K", type=int, help="fleet size / batch size / delay (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit-nav", description="Online learning for energy-efficient navigation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a single (policy, seed) cell")
    _add_common(run)

    swp = sub.add_parser("sweep", help="run the full policies x seeds grid")
    _add_common(swp)
    swp.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("BANDIT_NAV_JOBS", "1")),
        help="parallel sweep cells (default: BANDIT_NAV_JOBS or 1)",
    )

    gen = sub.add_parser("gen-synth", help="generate a synthetic instance")
    gen.add_argument("--n", type=int, required=True, help="vertex count")
    gen.add_argument("--o", type=int, required=True, help="edge count")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="output directory")

    val = sub.add_parser("validate", help="diagnose a network file")
    val.add_argument("--network", required=True)
    val.add_argument("--source", help="check reachability from this vertex")
    val.add_argument("--target", help="check reachability to this vertex")
    return parser


def _effective_config(args) -> netio.ScenarioConfig:
    config = netio.load_config(args.config)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    if args.policy is not None:
        config = replace(config, policies=(args.policy,))
    if args.T is not None:
        config = replace(config, T=args.T)
    if args.K is not None:
        config = replace(config, K=args.K)
    return config.validate()


def _cmd_run(args) -> int:
    config = _effective_config(args)
    # a run is a single cell: pin the first policy/seed so the echoed
    # config records exactly what executed
    config = replace(config, policies=config.policies[:1], seeds=config.seeds[:1])
    graph = netio.load_network(args.network)
    out = FsPath(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.json").write_text(config.to_json(), encoding="utf-8")
    policy = config.policies[0]
    seed = config.seeds[0]
    trace = run_cell(graph, config, policy, seed)
    netio.write_trace_csv(trace, out / f"{trace.meta.run_id}.csv")
    netio.write_paths_csv(trace, out / f"{trace.meta.run_id}_paths.csv")
    print(f"{trace.meta.run_id}: final regret {trace.mean_final_regret():.3f} Wh over T={config.T}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _effective_config(args)
    graph = netio.load_network(args.network)
    result = sweep(graph, config, jobs=max(1, args.jobs), network_path=args.network)
    for row in result.summary_rows:
        print(
            f"{row['policy']:<24} avg={row['avg_final_regret']:.3f} "
            f"sd={row['sd_final_regret']:.3f} runs={row['n_runs']}"
        )
    if result.failures:
        for policy, seed, message in result.failures:
            print(f"FAILED cell ({policy}, seed {seed}): {message}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_gen_synth(args) -> int:
    spec = SynthSpec(n=args.n, o=args.o, seed=args.seed)
    graph, gt, belief = generate(spec)
    out = FsPath(args.out)
    netio.save_network(graph, out / "synth_network.csv")
    netio.save_ground_truth(graph, gt, belief, out / "synth_truth.csv")
    print(f"wrote {out / 'synth_network.csv'} and {out / 'synth_truth.csv'} (n={args.n}, o={args.o})")
    return EXIT_OK


def _cmd_validate(args) -> int:
    graph = netio.load_network(args.network, validate=False)
    findings = validate_graph(graph, args.source, args.target)
    if not findings:
        print(f"{args.network}: no findings ({graph.n_vertices} vertices, {graph.n_edges} edges)")
        return EXIT_OK
    for finding in findings:
        print(f"{finding.code}: {finding.message}")
    return EXIT_VALIDATION


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "gen-synth": _cmd_gen_synth, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except (ValidationError, NoPathError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as err:  # pragma: no cover - defensive
        logger.exception("unexpected failure")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
