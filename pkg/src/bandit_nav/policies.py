"""Exploration policies: edge-weight rules and path-selection wrappers.

Weight rules (greedy, posterior sampling, posterior quantiles) turn the
current belief into a positive weight vector for the shortest-path solver.
Wrappers add single-edge epsilon exploration, queued delayed feedback, and
batch schedules on top.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .energy import BeliefState
from .errors import NoPathError, ValidationError
from .graph import Path, RoadGraph, shortest_path

logger = logging.getLogger(__name__)

EPS_EDGE_RETRIES = 16


def greedy_weights(belief: BeliefState) -> np.ndarray:
    """Weights from the posterior mean: no exploration beyond the prior."""
    return belief.weights_from_theta(belief.posterior_theta())


def ts_weights(belief: BeliefState, rng: np.random.Generator) -> np.ndarray:
    """Weights from one independent posterior draw per edge."""
    return belief.weights_from_theta(belief.sample_theta(rng))


def quantile_level(t: int) -> float:
    """Optimism level at round t; 1/(t+1) keeps the first round finite."""
    if t < 1:
        raise ValidationError(f"round index must be >= 1, got {t}")
    return 1.0 / (t + 1.0)


def bayesucb_weights(belief: BeliefState, t: int) -> np.ndarray:
    """Weights from the optimistically-low energy quantile at round t."""
    return belief.weights_from_theta(belief.quantile_theta(quantile_level(t)))


def eps_greedy_select(
    graph: RoadGraph,
    belief: BeliefState,
    t: int,
    epsilon: float,
    source: int,
    target: int,
    rng: np.random.Generator,
) -> Path:
    """With probability epsilon, explore through one uniformly drawn edge.

    The exploration path concatenates the greedy path to the edge tail, the
    edge itself, and the greedy path from the edge head; otherwise the plain
    greedy path is played. An edge whose concatenation is infeasible is
    resampled a bounded number of times before falling back to greedy.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValidationError(f"epsilon must be in [0, 1], got {epsilon}")
    weights = greedy_weights(belief)
    if rng.random() < epsilon:
        for _ in range(EPS_EDGE_RETRIES):
            eid = int(rng.integers(graph.n_edges))
            u, v = graph.endpoints(eid)
            try:
                head = shortest_path(graph, weights, source, u)
                tail = shortest_path(graph, weights, v, target)
            except NoPathError:
                continue
            return Path.from_edges(graph, head.edges + (eid,) + tail.edges, source=source)
        logger.warning("t=%d: no feasible exploration edge after %d draws, playing greedy", t, EPS_EDGE_RETRIES)
    return shortest_path(graph, weights, source, target)


class Policy:
    """Deterministic function of (belief, round, rng stream) to a path."""

    name: str = ""
    display: str = ""

    def select(
        self,
        graph: RoadGraph,
        belief: BeliefState,
        t: int,
        source: int,
        target: int,
        rng: np.random.Generator,
    ) -> Path:
        raise NotImplementedError


class GreedyPolicy(Policy):
    name = "greedy"
    display = "greedy"

    def select(self, graph, belief, t, source, target, rng):
        return shortest_path(graph, greedy_weights(belief), source, target)


class ThompsonSamplingPolicy(Policy):
    name = "ts"
    display = "TS"

    def select(self, graph, belief, t, source, target, rng):
        return shortest_path(graph, ts_weights(belief, rng), source, target)


class BayesUcbPolicy(Policy):
    name = "bayes-ucb"
    display = "BayesUCB"

    def select(self, graph, belief, t, source, target, rng):
        return shortest_path(graph, bayesucb_weights(belief, t), source, target)


class EpsilonGreedyPolicy(Policy):
    """Single-edge exploration with a constant or decaying schedule."""

    def __init__(self, schedule: Callable[[int], float], name: str, display: str):
        self._schedule = schedule
        self.name = name
        self.display = display

    def select(self, graph, belief, t, source, target, rng):
        return eps_greedy_select(graph, belief, t, self._schedule(t), source, target, rng)


def make_policy(name: str) -> Policy:
    """Policy registry: greedy | ts | bayes-ucb | eps-greedy-X | eps-t-greedy-C.

    Wrapper policies (batched-ts, qpm-d-ts) are run-loop level and resolved
    by the simulator, with ``ts`` as the inner policy.
    """
    if name == "greedy":
        return GreedyPolicy()
    if name in ("ts", "batched-ts", "qpm-d-ts"):
        return ThompsonSamplingPolicy()
    if name == "bayes-ucb":
        return BayesUcbPolicy()
    if name.startswith("eps-greedy-"):
        eps = float(name.removeprefix("eps-greedy-"))
        if not 0.0 <= eps <= 1.0:
            raise ValidationError(f"constant epsilon must be in [0, 1], got {eps}")
        return EpsilonGreedyPolicy(lambda t, e=eps: e, name, name)
    if name.startswith("eps-t-greedy-"):
        c = float(name.removeprefix("eps-t-greedy-"))
        if c <= 0.0:
            raise ValidationError(f"decay constant must be > 0, got {c}")
        return EpsilonGreedyPolicy(lambda t, c=c: min(1.0, c / t), name, name)
    raise ValidationError(f"unknown policy {name!r}")


POLICY_NAMES = ("greedy", "ts", "bayes-ucb", "eps-greedy-<x>", "eps-t-greedy-<c>", "batched-ts", "qpm-d-ts")


def agent_label(model_kind: str, policy_name: str) -> str:
    """Table/legend label: N- prefix for rectified-Gaussian, LN- for Log-Gaussian."""
    prefix = "N" if model_kind == "rect" else "LN"
    display = make_policy(policy_name).display if policy_name not in ("batched-ts", "qpm-d-ts") else {
        "batched-ts": "batched-TS",
        "qpm-d-ts": "QPM-D-TS",
    }[policy_name]
    return f"{prefix}-{display}"


# ---------------------------------------------------------------------------
# Batched feedback
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchSchedule:
    """Fixed batch boundaries t_b = b*K over a horizon T = B*K."""

    horizon: int
    batch_size: int

    def __post_init__(self):
        if self.horizon < 1 or self.batch_size < 1:
            raise ValidationError("horizon and batch size must be >= 1")
        if self.horizon % self.batch_size:
            raise ValidationError(f"batch size {self.batch_size} does not divide horizon {self.horizon}")

    @property
    def n_batches(self) -> int:
        return self.horizon // self.batch_size

    def is_boundary(self, t: int) -> bool:
        return t % self.batch_size == 0


# ---------------------------------------------------------------------------
# Queued delayed feedback
# ---------------------------------------------------------------------------


class AgentProtocol(Protocol):
    def propose(self) -> Path: ...

    def observe(self, path: Path, rewards: dict[int, float]) -> None: ...


class FeedbackQueues:
    """Per-arm FIFO reward queues keyed by the exact edge-id sequence."""

    def __init__(self):
        self._queues: dict[tuple[int, ...], deque] = {}

    def push(self, path: Path, rewards: dict[int, float]) -> None:
        self._queues.setdefault(path.edges, deque()).append(rewards)

    def pop(self, path: Path) -> dict[int, float]:
        return self._queues[path.edges].popleft()

    def has_pending(self, path: Path) -> bool:
        q = self._queues.get(path.edges)
        return bool(q)

    def depth(self, path: Path) -> int:
        q = self._queues.get(path.edges)
        return len(q) if q else 0


class QueuedDelayWrapper:
    """Turns a no-delay agent into one tolerating delayed feedback.

    The wrapped agent only advances when its pending arm has queued feedback;
    until then the wrapper replays that arm, and any extra rewards received
    for an arm wait in FIFO order.
    """

    def __init__(self, agent: AgentProtocol):
        self.queues = FeedbackQueues()
        self._agent = agent
        self._arm = agent.propose()

    def next_arm(self) -> Path:
        """Drain queued feedback into the agent, then return the arm to play."""
        while self.queues.has_pending(self._arm):
            self._agent.observe(self._arm, self.queues.pop(self._arm))
            self._arm = self._agent.propose()
        return self._arm

    def receive(self, arm: Path, rewards: dict[int, float]) -> None:
        """Bank rewards that arrived (possibly late) for ``arm``."""
        self.queues.push(arm, rewards)
