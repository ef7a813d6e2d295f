"""Render experiment CSVs into static figures.

Four figure kinds, all read-only over the simulator's CSV schemas:

* ``regret-curves``: mean cumulative regret over time, one line per policy
  (legend labels come straight from the trace files, N-/LN- prefixes kept).
* ``fleet``: mean per-agent cumulative regret, one line per fleet size.
* ``scaling``: final regret as a function of the edge count, one line per
  vertex count.
* ``heatmap``: the road network drawn from its coordinates with traversed
  edges shaded by visit count (darker = more trips).

Rendering is deterministic: fixed style, no randomness, so identical
inputs give identical images.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "bandit-nav-plots"

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

PLOT_KINDS = ("regret-curves", "fleet", "scaling", "heatmap")

TRACE_COLUMNS = {"run_id", "scenario", "policy", "agent", "t", "path_hash", "instant_regret", "cumulative_regret"}
SCALING_COLUMNS = {"n_vertices", "n_edges", "avg_final_regret"}
NETWORK_COLUMNS = {"from_id", "to_id", "lat1", "lon1", "lat2", "lon2"}

FIGSIZE = (7.0, 4.5)
DPI = 120


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input CSVs, figure kind, output image path."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    network: str | None = None  # heatmap only: network CSV with coordinates


def _require_columns(df: pd.DataFrame, needed: set[str], source) -> None:
    missing = sorted(needed - set(df.columns))
    if missing:
        raise ValueError(f"{source}: missing required columns {missing}")


def _load_traces(paths) -> pd.DataFrame:
    frames = []
    for p in paths:
        df = pd.read_csv(p)
        _require_columns(df, TRACE_COLUMNS, p)
        df["source_file"] = str(p)
        frames.append(df)
    if not frames:
        raise ValueError("no input trace files given")
    return pd.concat(frames, ignore_index=True)


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, output) -> Path:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip writer timestamps so identical inputs give identical bytes
    if out.suffix.lower() == ".svg":
        metadata = {"Date": None}
    else:
        metadata = {"Software": "bandit-nav-plots"}
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return out


def _render_regret_curves(spec: PlotSpec) -> Path:
    df = _load_traces(spec.inputs)
    fig, ax = _new_axes("Average cumulative regret", "time step", "cumulative regret (Wh)")
    # average over runs and agents at each step, one curve per policy
    curves = df.groupby(["policy", "t"])["cumulative_regret"].mean().reset_index()
    for policy in sorted(curves["policy"].unique()):
        sub = curves[curves["policy"] == policy]
        ax.plot(sub["t"], sub["cumulative_regret"], label=policy)
    ax.legend()
    return _save(fig, spec.output)


def _render_fleet(spec: PlotSpec) -> Path:
    df = _load_traces(spec.inputs)
    sizes = df.groupby("run_id")["agent"].nunique().rename("K")
    df = df.join(sizes, on="run_id")
    fig, ax = _new_axes("Per-agent cumulative regret by fleet size", "time step", "cumulative regret (Wh)")
    curves = df.groupby(["K", "t"])["cumulative_regret"].mean().reset_index()
    for k in sorted(curves["K"].unique()):
        sub = curves[curves["K"] == k]
        ax.plot(sub["t"], sub["cumulative_regret"], label=f"K={k}")
    ax.legend()
    return _save(fig, spec.output)


def _render_scaling(spec: PlotSpec) -> Path:
    frames = [pd.read_csv(p) for p in spec.inputs]
    if not frames:
        raise ValueError("no input scaling files given")
    df = pd.concat(frames, ignore_index=True)
    _require_columns(df, SCALING_COLUMNS, spec.inputs[0])
    fig, ax = _new_axes("Final regret vs edge count", "|E|", "final cumulative regret (Wh)")
    for n in sorted(df["n_vertices"].unique()):
        sub = df[df["n_vertices"] == n].sort_values("n_edges")
        ax.plot(sub["n_edges"], sub["avg_final_regret"], marker="o", label=f"|V|={n}")
        if "sd_final_regret" in sub.columns:
            ax.errorbar(
                sub["n_edges"],
                sub["avg_final_regret"],
                yerr=sub["sd_final_regret"],
                fmt="none",
                alpha=0.4,
            )
    ax.legend()
    return _save(fig, spec.output)


def visit_shades(counts) -> np.ndarray:
    """Shade in [0, 1] per edge: a linear ramp in visit count, clipped at the
    99th percentile of the positive counts so rare detours stay visible."""
    counts = np.asarray(counts, dtype=float)
    if counts.size == 0 or counts.max() <= 0.0:
        return np.zeros_like(counts)
    cap = max(float(np.percentile(counts[counts > 0.0], 99)), 1e-12)
    return np.clip(counts / cap, 0.0, 1.0)


def _paths_sidecar(trace_path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.stem + "_paths.csv")


def edge_visit_counts(trace_paths) -> Counter:
    """Trips per edge id, resolved through each trace's path_hash sidecar."""
    counts: Counter = Counter()
    for trace_path in trace_paths:
        sidecar = _paths_sidecar(trace_path)
        if not sidecar.exists():
            raise ValueError(f"{trace_path}: sidecar {sidecar.name} with edge sequences not found")
        table = pd.read_csv(sidecar)
        _require_columns(table, {"path_hash", "edge_ids"}, sidecar)
        edges_of = {
            row.path_hash: [int(e) for e in str(row.edge_ids).split("|") if e != ""]
            for row in table.itertuples()
        }
        df = pd.read_csv(trace_path)
        _require_columns(df, TRACE_COLUMNS, trace_path)
        for h in df["path_hash"]:
            for e in edges_of.get(h, ()):
                counts[e] += 1
    return counts


def _render_heatmap(spec: PlotSpec) -> Path:
    if spec.network is None:
        raise ValueError("heatmap needs a network CSV with edge coordinates")
    net = pd.read_csv(spec.network)
    _require_columns(net, NETWORK_COLUMNS, spec.network)
    if net[["lat1", "lon1", "lat2", "lon2"]].isna().any().any():
        raise ValueError(f"{spec.network}: heatmap needs coordinates on every edge")
    counts = edge_visit_counts(spec.inputs)
    count_vec = np.array([counts.get(e, 0) for e in range(len(net))], dtype=float)
    shades = visit_shades(count_vec)

    fig, ax = plt.subplots(figsize=(6.5, 6.0), dpi=DPI)
    ax.set_title("Edges traveled (darker = more trips)")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    cmap = plt.get_cmap("Reds")
    for e, row in enumerate(net.itertuples()):
        xs = (row.lon1, row.lon2)
        ys = (row.lat1, row.lat2)
        if count_vec[e] > 0:
            ax.plot(xs, ys, color=cmap(0.2 + 0.8 * shades[e]), linewidth=1.0 + 2.5 * shades[e], zorder=2)
        else:
            ax.plot(xs, ys, color="0.82", linewidth=0.8, zorder=1)
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, spec.output)


_RENDERERS = {
    "regret-curves": _render_regret_curves,
    "fleet": _render_fleet,
    "scaling": _render_scaling,
    "heatmap": _render_heatmap,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the written image path."""
    if spec.kind not in _RENDERERS:
        raise ValueError(f"unknown plot kind {spec.kind!r}, expected one of {PLOT_KINDS}")
    if not spec.inputs:
        raise ValueError("at least one input CSV is required")
    return _RENDERERS[spec.kind](spec)
