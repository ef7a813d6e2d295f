"""Directed road-network graph, path representation, and shortest-path search.

Vertices are dense integers 0..n_vertices-1 and edges dense integers
0..n_edges-1. A bidirectional road is stored as two independent directed
edges. All traversal orders are fixed (out-edges sorted by edge id), so the
search is fully deterministic, which keeps seeded simulation traces
reproducible byte for byte.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NoPathError, ValidationError


@dataclass(frozen=True)
class EdgeAttributes:
    """Physical attributes of one directed road segment.

    ``mean_speed_mps`` and ``speed_var`` describe observed traffic and may be
    absent (None) for networks that are only used with known-prior scenarios.
    """

    length_m: float
    incline_rad: float = 0.0
    speed_limit_mps: float = 13.89
    mean_speed_mps: float | None = None
    speed_var: float | None = None
    lat1: float | None = None
    lon1: float | None = None
    lat2: float | None = None
    lon2: float | None = None

    def validate(self) -> None:
        if not (math.isfinite(self.length_m) and self.length_m >= 0.0):
            raise ValidationError(f"length_m must be finite and >= 0, got {self.length_m}")
        if not (math.isfinite(self.incline_rad) and abs(self.incline_rad) < math.pi / 2):
            raise ValidationError(f"incline_rad must satisfy |a| < pi/2, got {self.incline_rad}")
        if not (math.isfinite(self.speed_limit_mps) and self.speed_limit_mps >= 0.0):
            raise ValidationError(f"speed_limit_mps must be finite and >= 0, got {self.speed_limit_mps}")
        for name in ("mean_speed_mps", "speed_var"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")


class RoadGraph:
    """Immutable directed graph with per-edge attributes.

    Safe to share read-only across concurrent runs; per-run weight vectors
    are kept outside the graph.
    """

    def __init__(
        self,
        n_vertices: int,
        edges: Iterable[tuple[int, int, EdgeAttributes]],
        vertex_labels: Sequence[str] | None = None,
        validate: bool = True,
    ):
        if n_vertices < 1:
            raise ValidationError("graph needs at least one vertex")
        self.n_vertices = int(n_vertices)
        tails: list[int] = []
        heads: list[int] = []
        attrs: list[EdgeAttributes] = []
        for u, v, a in edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValidationError(f"edge ({u},{v}) references a vertex outside 0..{self.n_vertices - 1}")
            if u == v:
                raise ValidationError(f"self-loop at vertex {u} is not allowed")
            if validate:
                a.validate()
            tails.append(u)
            heads.append(v)
            attrs.append(a)
        self._tails = tuple(tails)
        self._heads = tuple(heads)
        self._attrs = tuple(attrs)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for eid in range(len(tails)):
            adj[tails[eid]].append((eid, heads[eid]))
        # out-edges already in edge-id order because eid is ascending
        self._adj = tuple(tuple(out) for out in adj)
        if vertex_labels is not None:
            labels = tuple(str(s) for s in vertex_labels)
            if len(labels) != self.n_vertices:
                raise ValidationError("vertex_labels length must equal n_vertices")
            self.vertex_labels: tuple[str, ...] | None = labels
            self._label_to_id = {s: i for i, s in enumerate(labels)}
        else:
            self.vertex_labels = None
            self._label_to_id = {}

    @property
    def n_edges(self) -> int:
        return len(self._tails)

    def endpoints(self, edge_id: int) -> tuple[int, int]:
        return self._tails[edge_id], self._heads[edge_id]

    def attributes(self, edge_id: int) -> EdgeAttributes:
        return self._attrs[edge_id]

    def edge_attributes(self) -> tuple[EdgeAttributes, ...]:
        return self._attrs

    def out_edges(self, vertex: int) -> tuple[tuple[int, int], ...]:
        """(edge_id, head) pairs leaving ``vertex``, ascending by edge id."""
        return self._adj[vertex]

    def vertex_id(self, vertex: int | str) -> int:
        """Resolve an integer id or an ingestion-time string label."""
        if isinstance(vertex, str):
            if vertex in self._label_to_id:
                return self._label_to_id[vertex]
            if vertex.lstrip("-").isdigit():
                vertex = int(vertex)
            else:
                raise ValidationError(f"unknown vertex label {vertex!r}")
        v = int(vertex)
        if not 0 <= v < self.n_vertices:
            raise ValidationError(f"vertex {v} outside 0..{self.n_vertices - 1}")
        return v

    def label(self, vertex: int) -> str:
        if self.vertex_labels is not None:
            return self.vertex_labels[vertex]
        return str(vertex)


@dataclass(frozen=True)
class Path:
    """A connected edge sequence from ``vertices[0]`` to ``vertices[-1]``.

    Search output is always simple (positive weights admit no cycles);
    exploration paths built by concatenation may revisit vertices, in which
    case the distinct-edge view is what reward and regret accounting use.
    """

    edges: tuple[int, ...]
    vertices: tuple[int, ...]

    @classmethod
    def from_edges(cls, graph: RoadGraph, edges: Iterable[int], source: int | None = None) -> "Path":
        edges = tuple(int(e) for e in edges)
        if not edges:
            if source is None:
                raise ValidationError("an empty path needs an explicit source vertex")
            return cls((), (graph.vertex_id(source),))
        for e in edges:
            if not 0 <= e < graph.n_edges:
                raise ValidationError(f"edge id {e} outside 0..{graph.n_edges - 1}")
        verts = [graph.endpoints(edges[0])[0]]
        for e in edges:
            u, v = graph.endpoints(e)
            if u != verts[-1]:
                raise ValidationError(f"edge {e} does not continue the path at vertex {verts[-1]}")
            verts.append(v)
        if source is not None and verts[0] != graph.vertex_id(source):
            raise ValidationError(f"path starts at {verts[0]}, expected {source}")
        return cls(edges, tuple(verts))

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]

    @property
    def unique_edges(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.edges)))

    def is_simple(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def __len__(self) -> int:
        return len(self.edges)


def path_weight(path: Path, weights) -> float:
    """Total weight of a path: the exact sum over member edges, in order."""
    n = len(weights)
    total = 0.0
    for e in path.edges:
        if not 0 <= e < n:
            raise ValidationError(f"edge id {e} outside the weight vector of length {n}")
        total += float(weights[e])
    return total


def _checked_weights(graph: RoadGraph, weights) -> list[float]:
    w = np.asarray(weights, dtype=float)
    if w.shape != (graph.n_edges,):
        raise ValidationError(f"weight vector must have shape ({graph.n_edges},), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must all be finite")
    if not np.all(w > 0.0):
        raise ValidationError("weights must all be strictly positive")
    return w.tolist()


def shortest_path(graph: RoadGraph, weights, source: int | str, target: int | str) -> Path:
    """Minimum-total-weight path from source to target (Dijkstra).

    Ties between equal-cost relaxations are broken toward the smaller edge
    id, so repeated calls on identical inputs return the identical path.
    """
    w = _checked_weights(graph, weights)
    source = graph.vertex_id(source)
    target = graph.vertex_id(target)
    if source == target:
        return Path((), (source,))

    inf = math.inf
    dist = [inf] * graph.n_vertices
    parent = [-1] * graph.n_vertices
    done = [False] * graph.n_vertices
    dist[source] = 0.0
    heap: list[tuple[float, int]] = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for eid, v in graph.out_edges(u):
            if done[v]:
                continue
            nd = d + w[eid]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = eid
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and eid < parent[v]:
                parent[v] = eid

    if not done[target]:
        raise NoPathError(f"no path from vertex {source} to vertex {target}")

    edges: list[int] = []
    v = target
    while v != source:
        e = parent[v]
        edges.append(e)
        v = graph.endpoints(e)[0]
    edges.reverse()
    return Path.from_edges(graph, edges, source=source)


@dataclass(frozen=True)
class Finding:
    """One diagnostic emitted by validate_graph."""

    code: str
    message: str


def validate_graph(graph: RoadGraph, source: int | str | None = None, target: int | str | None = None) -> list[Finding]:
    """Diagnostic report: attribute violations, isolated vertices, reachability.

    Never raises; returns an empty list for a healthy graph.
    """
    findings: list[Finding] = []
    for eid in range(graph.n_edges):
        try:
            graph.attributes(eid).validate()
        except ValidationError as err:
            findings.append(Finding("bad-attribute", f"edge {eid}: {err}"))

    degree = [0] * graph.n_vertices
    for eid in range(graph.n_edges):
        u, v = graph.endpoints(eid)
        degree[u] += 1
        degree[v] += 1
    for u, deg in enumerate(degree):
        if deg == 0:
            findings.append(Finding("isolated-vertex", f"vertex {u} ({graph.label(u)}) has no edges"))

    if source is not None and target is not None:
        s = graph.vertex_id(source)
        t = graph.vertex_id(target)
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for _, v in graph.out_edges(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if t not in seen:
            findings.append(Finding("unreachable", f"target {graph.label(t)} is unreachable from source {graph.label(s)}"))
    return findings
