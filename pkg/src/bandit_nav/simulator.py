"""Online learning loops, fleet synchronization, and regret accounting.

Every random draw comes from a named substream keyed by
(run key, role, agent, step), so a trace is a pure function of its
configuration and seed, fleet size changes do not perturb other agents'
draws, and the wrapper loops (delay queues, batching) reproduce their base
policy exactly in the degenerate cases.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .energy import BeliefState
from .environment import GroundTruth, sample_rewards, true_energy_weights
from .errors import ValidationError
from .graph import Path, RoadGraph, shortest_path
from .policies import BatchSchedule, Policy, QueuedDelayWrapper

ROLE_POLICY = 0
ROLE_ENV = 1
ROLE_INSTANCE = 2

RunKey = tuple[int, ...]


def substream(key: RunKey, role: int, agent: int, t: int) -> np.random.Generator:
    """Independent generator for one (run, role, agent, step) cell."""
    return np.random.default_rng(np.random.SeedSequence((*key, role, agent, t)))


def instance_stream(key: RunKey, index: int = 0) -> np.random.Generator:
    return substream(key, ROLE_INSTANCE, 0, index)


def path_hash(path: Path) -> str:
    """Stable short identifier of an edge sequence (not Python's hash)."""
    payload = ",".join(str(e) for e in path.edges).encode()
    return hashlib.sha1(payload).hexdigest()[:12]


@dataclass(frozen=True)
class TraceMeta:
    run_id: str
    scenario: str
    policy: str
    seed: int
    horizon: int
    n_agents: int


class RegretTrace:
    """Per-step record of chosen paths and regret, single- or multi-agent."""

    def __init__(self, meta: TraceMeta):
        self.meta = meta
        self.t: list[int] = []
        self.agent: list[int] = []
        self.paths: list[Path] = []
        self.instant: list[float] = []
        self.cumulative: list[float] = []
        self._running: dict[int, float] = {}

    def record(self, t: int, agent: int, path: Path, instant_regret: float) -> None:
        total = self._running.get(agent, 0.0) + instant_regret
        self._running[agent] = total
        self.t.append(t)
        self.agent.append(agent)
        self.paths.append(path)
        self.instant.append(instant_regret)
        self.cumulative.append(total)

    def final_regret(self, agent: int = 0) -> float:
        return self._running.get(agent, 0.0)

    def mean_final_regret(self) -> float:
        """Final cumulative regret averaged over agents."""
        if not self._running:
            return 0.0
        return float(np.mean([self._running[a] for a in sorted(self._running)]))

    def action_sequence(self, agent: int = 0) -> list[tuple[int, ...]]:
        return [p.edges for p, a in zip(self.paths, self.agent) if a == agent]

    def instant_series(self, agent: int = 0) -> np.ndarray:
        return np.array([r for r, a in zip(self.instant, self.agent) if a == agent])

    def rows(self):
        """Trace CSV rows: run_id, scenario, policy, agent, t, path_hash,
        instant_regret, cumulative_regret."""
        m = self.meta
        for i in range(len(self.t)):
            yield (
                m.run_id,
                m.scenario,
                m.policy,
                self.agent[i],
                self.t[i],
                path_hash(self.paths[i]),
                self.instant[i],
                self.cumulative[i],
            )

    def path_table(self) -> dict[str, tuple[int, ...]]:
        return {path_hash(p): p.edges for p in self.paths}


class RegretEvaluator:
    """Scores chosen paths against the fixed optimum of one instance."""

    def __init__(self, graph: RoadGraph, gt: GroundTruth, source: int, target: int):
        self.weights = true_energy_weights(gt)
        self.optimal = shortest_path(graph, self.weights, source, target)
        self.optimal_cost = self.cost(self.optimal)

    def cost(self, path: Path) -> float:
        return float(sum(self.weights[e] for e in path.unique_edges))

    def gap(self, path: Path) -> float:
        return self.cost(path) - self.optimal_cost


class OnlineAgent:
    """One belief-driven decision maker with its own policy substream.

    ``propose`` advances the agent's internal round counter; ``observe``
    applies the conjugate update. Wrapper loops may interleave the two
    arbitrarily.
    """

    def __init__(
        self,
        graph: RoadGraph,
        belief: BeliefState,
        policy: Policy,
        source: int,
        target: int,
        run_key: RunKey,
        agent_index: int = 0,
    ):
        self.graph = graph
        self.belief = belief
        self.policy = policy
        self.source = graph.vertex_id(source)
        self.target = graph.vertex_id(target)
        self.run_key = run_key
        self.agent_index = agent_index
        self.rounds = 0

    def propose(self) -> Path:
        self.rounds += 1
        rng = substream(self.run_key, ROLE_POLICY, self.agent_index, self.rounds)
        return self.policy.select(self.graph, self.belief, self.rounds, self.source, self.target, rng)

    def observe(self, path: Path, rewards: dict[int, float]) -> None:
        self.belief.update(rewards)


def _meta(scenario: str, policy: str, seed: int, T: int, K: int) -> TraceMeta:
    run_id = f"{scenario}_{policy}_K{K}_seed{seed}"
    return TraceMeta(run_id=run_id, scenario=scenario, policy=policy, seed=seed, horizon=T, n_agents=K)


def run_single(
    graph: RoadGraph,
    gt: GroundTruth,
    belief: BeliefState,
    policy: Policy,
    T: int,
    run_key: RunKey,
    source: int,
    target: int,
    scenario: str = "",
) -> RegretTrace:
    """The plain online loop: select, traverse, observe, update."""
    if T < 1:
        raise ValidationError(f"horizon must be >= 1, got {T}")
    evaluator = RegretEvaluator(graph, gt, graph.vertex_id(source), graph.vertex_id(target))
    agent = OnlineAgent(graph, belief, policy, source, target, run_key)
    trace = RegretTrace(_meta(scenario, policy.name, run_key[0], T, 1))
    for t in range(1, T + 1):
        path = agent.propose()
        rewards = sample_rewards(gt, path, substream(run_key, ROLE_ENV, 0, t))
        trace.record(t, 0, path, evaluator.gap(path))
        agent.observe(path, rewards)
    return trace


def run_fleet(
    graph: RoadGraph,
    gt: GroundTruth,
    belief: BeliefState,
    policy: Policy,
    T: int,
    K: int,
    run_key: RunKey,
    source: int,
    target: int,
    scenario: str = "",
) -> RegretTrace:
    """Synchronous fleet: K selections per step from one frozen belief,
    then all K observations merged at the barrier."""
    if T < 1 or K < 1:
        raise ValidationError("horizon and fleet size must be >= 1")
    evaluator = RegretEvaluator(graph, gt, graph.vertex_id(source), graph.vertex_id(target))
    agents = [OnlineAgent(graph, belief, policy, source, target, run_key, agent_index=k) for k in range(K)]
    trace = RegretTrace(_meta(scenario, policy.name, run_key[0], T, K))
    for t in range(1, T + 1):
        # selections all read the same posterior: updates happen only below
        picks = [agent.propose() for agent in agents]
        feedback = [sample_rewards(gt, picks[k], substream(run_key, ROLE_ENV, k, t)) for k in range(K)]
        for k in range(K):
            trace.record(t, k, picks[k], evaluator.gap(picks[k]))
        for k in range(K):
            agents[k].observe(picks[k], feedback[k])
    return trace


def run_batched(
    graph: RoadGraph,
    gt: GroundTruth,
    belief: BeliefState,
    policy: Policy,
    T: int,
    batch_size: int,
    run_key: RunKey,
    source: int,
    target: int,
    scenario: str = "",
) -> RegretTrace:
    """Batched feedback: selections within a batch sample from the posterior
    frozen at the batch start; one posterior update per batch boundary."""
    schedule = BatchSchedule(T, batch_size)
    evaluator = RegretEvaluator(graph, gt, graph.vertex_id(source), graph.vertex_id(target))
    agent = OnlineAgent(graph, belief, policy, source, target, run_key)
    trace = RegretTrace(_meta(scenario, f"batched-{policy.name}", run_key[0], T, batch_size))
    pending: list[tuple[Path, dict[int, float]]] = []
    for t in range(1, T + 1):
        path = agent.propose()
        rewards = sample_rewards(gt, path, substream(run_key, ROLE_ENV, 0, t))
        trace.record(t, 0, path, evaluator.gap(path))
        pending.append((path, rewards))
        if schedule.is_boundary(t):
            for p, r in pending:
                agent.observe(p, r)
            pending.clear()
    return trace


def run_delayed(
    graph: RoadGraph,
    gt: GroundTruth,
    belief: BeliefState,
    policy: Policy,
    T: int,
    delay: int,
    run_key: RunKey,
    source: int,
    target: int,
    scenario: str = "",
) -> RegretTrace:
    """Queued delayed feedback: the reward of the arm played at step s
    arrives at step s + delay - 1 and is drained through per-arm queues."""
    if delay < 1:
        raise ValidationError(f"delay must be >= 1, got {delay}")
    evaluator = RegretEvaluator(graph, gt, graph.vertex_id(source), graph.vertex_id(target))
    agent = OnlineAgent(graph, belief, policy, source, target, run_key)
    wrapper = QueuedDelayWrapper(agent)
    trace = RegretTrace(_meta(scenario, f"qpm-d-{policy.name}", run_key[0], T, delay))
    in_flight: dict[int, list[tuple[Path, dict[int, float]]]] = {}
    for t in range(1, T + 1):
        arm = wrapper.next_arm()
        rewards = sample_rewards(gt, arm, substream(run_key, ROLE_ENV, 0, t))
        trace.record(t, 0, arm, evaluator.gap(arm))
        in_flight.setdefault(t + delay - 1, []).append((arm, rewards))
        for late_arm, late_rewards in in_flight.pop(t, []):
            wrapper.receive(late_arm, late_rewards)
    return trace


def bayes_regret_estimate(
    graph: RoadGraph,
    prior: BeliefState,
    policy: Policy,
    T: int,
    n_instances: int,
    seed: int,
    source: int,
    target: int,
) -> tuple[float, float, list[float]]:
    """Mean and sample SD of final regret over instances drawn from the prior.

    Instances are keyed by (seed, index), so different policies evaluated
    with the same seed face identical ground truths.
    """
    from .environment import build_known_prior

    if n_instances < 1:
        raise ValidationError("n_instances must be >= 1")
    finals = []
    for i in range(n_instances):
        gt = build_known_prior(graph, prior, instance_stream((seed,), i))
        trace = run_single(graph, gt, prior.copy(), policy, T, (seed, i), source, target, scenario="known-prior")
        finals.append(trace.final_regret())
    mean = float(np.mean(finals))
    sd = float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0
    return mean, sd, finals
