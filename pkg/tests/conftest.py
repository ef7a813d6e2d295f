import pytest

from bandit_nav.graph import EdgeAttributes, RoadGraph
from bandit_nav.netio import bundled_network_path, load_network


def attrs(length=100.0, incline=0.0, limit=13.89, mean=None, var=None):
    return EdgeAttributes(
        length_m=length,
        incline_rad=incline,
        speed_limit_mps=limit,
        mean_speed_mps=mean,
        speed_var=var,
    )


@pytest.fixture
def triangle():
    """A -> B -> C plus the direct A -> C edge (edge ids 0, 1, 2)."""
    return RoadGraph(3, [(0, 1, attrs()), (1, 2, attrs()), (0, 2, attrs())])


@pytest.fixture(scope="session")
def toy_graph():
    return load_network(bundled_network_path())


def random_graph(rng, n_vertices=None, edge_prob=0.35, ensure_route=True):
    """Random digraph used by enumeration oracles; guarantees 0 -> n-1 reachable."""
    n = int(n_vertices if n_vertices is not None else rng.integers(4, 11))
    while True:
        edges = []
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < edge_prob:
                    edges.append((u, v, attrs()))
        if not edges:
            continue
        graph = RoadGraph(n, edges)
        if not ensure_route or _reachable(graph, 0, n - 1):
            return graph


def _reachable(graph, source, target):
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        for _, v in graph.out_edges(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return target in seen


def enumerate_simple_paths(graph, source, target):
    """All simple paths source -> target as edge-id tuples (oracle)."""
    out = []

    def walk(u, visited, edges):
        if u == target:
            out.append(tuple(edges))
            return
        for eid, v in graph.out_edges(u):
            if v not in visited:
                visited.add(v)
                edges.append(eid)
                walk(v, visited, edges)
                edges.pop()
                visited.remove(v)

    walk(source, {source}, [])
    return out


def brute_force_min_cost(graph, weights, source, target):
    """(min cost, set of optimal edge tuples) by exhaustive enumeration."""
    candidates = enumerate_simple_paths(graph, source, target)
    assert candidates, "no path in enumeration oracle"
    costs = [sum(weights[e] for e in p) for p in candidates]
    best = min(costs)
    optimal = {p for p, c in zip(candidates, costs) if c == best}
    return best, optimal
