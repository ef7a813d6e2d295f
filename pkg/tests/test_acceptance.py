"""Acceptance suite: one test per primary criterion, at its stated tolerance.

The expensive experiment fixtures are session-scoped and shared between the
ranking and saturation criteria; every run below is a pure function of its
fixed seeds.
"""

import math
import time

import numpy as np
import pytest

from bandit_nav.energy import (
    GaussianBelief,
    gaussian_update,
    lognormal_likelihood_params,
    rectified_mean,
)
from bandit_nav.environment import build_correlated, build_known_prior, prior_beliefs
from bandit_nav.energy import VehicleParams
from bandit_nav.graph import path_weight, shortest_path
from bandit_nav.netio import bundled_network_path, load_network
from bandit_nav.policies import make_policy
from bandit_nav.simulator import (
    instance_stream,
    run_batched,
    run_delayed,
    run_fleet,
    run_single,
)
from bandit_nav.synthgen import SynthSpec, generate

from conftest import brute_force_min_cost, random_graph

TOY_SOURCE, TOY_TARGET = 0, 29
RANKING_POLICIES = ("ts", "bayes-ucb", "greedy", "eps-greedy-0.1", "eps-greedy-0.5")
RANKING_SEEDS = tuple(range(10))
RANKING_T = 2000


@pytest.fixture(scope="session")
def toy():
    return load_network(bundled_network_path())


@pytest.fixture(scope="session")
def toy_prior(toy):
    return prior_beliefs(toy, VehicleParams(), 0.25, 0.1)


@pytest.fixture(scope="session")
def synth():
    graph, _, prior = generate(SynthSpec(n=30, o=200, seed=0))
    return graph, prior


def _known_prior_runs(graph, prior, policy_name, seeds, T, source, target):
    finals, ts_series = [], []
    for seed in seeds:
        gt = build_known_prior(graph, prior, instance_stream((seed,)))
        trace = run_single(graph, gt, prior.copy(), make_policy(policy_name), T, (seed,), source, target)
        finals.append(trace.final_regret())
        ts_series.append(trace.instant_series())
    return finals, ts_series


@pytest.fixture(scope="session")
def ranking_results(toy, toy_prior, synth):
    """Final regrets (all policies) and TS instant-regret series, per network."""
    synth_graph, synth_prior = synth
    networks = {
        "toy": (toy, toy_prior, TOY_SOURCE, TOY_TARGET),
        "synthetic": (synth_graph, synth_prior, 0, 29),
    }
    results = {}
    for name, (graph, prior, s, t) in networks.items():
        finals = {}
        series = {}
        for policy in RANKING_POLICIES:
            f, inst = _known_prior_runs(graph, prior, policy, RANKING_SEEDS, RANKING_T, s, t)
            finals[policy] = f
            if policy == "ts":
                series[policy] = inst
        results[name] = (finals, series)
    return results


class TestPosteriorUpdateOracle:
    def test_criterion(self):
        start = time.perf_counter()
        rng = np.random.default_rng(0)
        for _ in range(1000):
            mu0 = float(rng.uniform(-500.0, -1.0))
            var0 = float(rng.uniform(0.01, 400.0))
            noise = float(rng.uniform(0.01, 100.0))
            n = int(rng.integers(1, 40))
            observations = rng.normal(mu0, math.sqrt(noise), size=n)
            belief = GaussianBelief(mu=mu0, var=var0, noise_var=noise)
            for r in observations:
                belief = gaussian_update(belief, float(r))
            precision = 1.0 / var0 + n / noise
            batch_mean = (mu0 / var0 + observations.sum() / noise) / precision
            assert belief.var == pytest.approx(1.0 / precision, rel=1e-9)
            assert belief.mu == pytest.approx(batch_mean, rel=1e-9)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        print(f"\nPASS posterior-update oracle: 1000 cases match batch closed form at 1e-9 rel ({elapsed:.2f} s)")


class TestRectifiedMeanOracle:
    def test_criterion(self):
        start = time.perf_counter()
        rng = np.random.default_rng(1)
        n = 10_000_000
        worst = 0.0
        for theta in (-50.0, -10.0, -1.0, 0.0, 1.0):
            for sigma in (0.1, 1.0, 10.0):
                draws = np.maximum(0.0, -theta + sigma * rng.standard_normal(n))
                mc = draws.mean()
                se = draws.std(ddof=1) / math.sqrt(n)
                err = abs(rectified_mean(theta, sigma) - mc)
                worst = max(worst, err / se if se > 0 else 0.0)
                assert err <= 3.0 * se + 1e-12, (theta, sigma, err, se)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0
        print(f"\nPASS rectified-mean oracle: 15 cells within 3 SE of 1e7-sample MC, worst {worst:.2f} SE ({elapsed:.1f} s)")


class TestLogGaussianMomentMatch:
    def test_criterion(self):
        start = time.perf_counter()
        rng = np.random.default_rng(2)
        for _ in range(1000):
            theta = -float(rng.uniform(0.5, 1000.0))
            noise_var = float(rng.uniform(0.0, 500.0))
            psi = -float(rng.uniform(0.5, 1000.0))
            loc, scale2 = lognormal_likelihood_params(theta, noise_var, psi)
            mean = math.exp(loc + scale2 / 2.0)
            var = math.expm1(scale2) * math.exp(2.0 * loc + scale2)
            assert mean == pytest.approx(-theta, rel=1e-10)
            assert var == pytest.approx(noise_var * theta**2 / psi**2, rel=1e-10, abs=1e-12)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        print(f"\nPASS log-Gaussian moment match: 1000 triples at 1e-10 rel ({elapsed:.2f} s)")


class TestShortestPathOracle:
    def test_criterion(self):
        start = time.perf_counter()
        rng = np.random.default_rng(3)
        for _ in range(500):
            graph = random_graph(rng)
            weights = rng.uniform(0.05, 10.0, size=graph.n_edges)
            found = shortest_path(graph, weights, 0, graph.n_vertices - 1)
            best, optimal = brute_force_min_cost(graph, weights, 0, graph.n_vertices - 1)
            assert path_weight(found, weights) == best
            assert found.edges in optimal
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0
        print(f"\nPASS shortest-path oracle: 500 graphs match brute-force enumeration exactly ({elapsed:.1f} s)")


class TestTrajectoryEquivalences:
    T = 200
    SEEDS = tuple(range(20))

    def _instance(self, toy, toy_prior, seed):
        gt = build_known_prior(toy, toy_prior, instance_stream((seed,)))
        return gt, toy_prior.copy()

    def test_qpm_d_delay_one(self, toy, toy_prior):
        start = time.perf_counter()
        for seed in self.SEEDS:
            gt, b1 = self._instance(toy, toy_prior, seed)
            _, b2 = self._instance(toy, toy_prior, seed)
            base = run_single(toy, gt, b1, make_policy("ts"), self.T, (seed,), TOY_SOURCE, TOY_TARGET)
            delayed = run_delayed(toy, gt, b2, make_policy("ts"), self.T, 1, (seed,), TOY_SOURCE, TOY_TARGET)
            assert base.action_sequence() == delayed.action_sequence()
        print(f"\nPASS trajectory equivalence: QPM-D(delay=1) == base policy, T=200 x 20 seeds ({time.perf_counter() - start:.1f} s)")

    def test_batched_k1(self, toy, toy_prior):
        start = time.perf_counter()
        for seed in self.SEEDS:
            gt, b1 = self._instance(toy, toy_prior, seed)
            _, b2 = self._instance(toy, toy_prior, seed)
            plain = run_single(toy, gt, b1, make_policy("ts"), self.T, (seed,), TOY_SOURCE, TOY_TARGET)
            batched = run_batched(toy, gt, b2, make_policy("ts"), self.T, 1, (seed,), TOY_SOURCE, TOY_TARGET)
            assert plain.action_sequence() == batched.action_sequence()
        print(f"PASS trajectory equivalence: batched-TS(K=1) == plain TS, T=200 x 20 seeds ({time.perf_counter() - start:.1f} s)")

    def test_fleet_k1(self, toy, toy_prior):
        start = time.perf_counter()
        for seed in self.SEEDS:
            gt, b1 = self._instance(toy, toy_prior, seed)
            _, b2 = self._instance(toy, toy_prior, seed)
            single = run_single(toy, gt, b1, make_policy("ts"), self.T, (seed,), TOY_SOURCE, TOY_TARGET)
            fleet = run_fleet(toy, gt, b2, make_policy("ts"), self.T, 1, (seed,), TOY_SOURCE, TOY_TARGET)
            assert single.action_sequence() == fleet.action_sequence(0)
        print(f"PASS trajectory equivalence: fleet(K=1) == single agent, T=200 x 20 seeds ({time.perf_counter() - start:.1f} s)")


class TestScalingWithEdges:
    def test_criterion(self):
        start = time.perf_counter()
        edge_counts = (200, 250, 300, 350, 400)
        means = {}
        for o in edge_counts:
            finals = []
            for seed in range(10):
                graph, gt, belief = generate(SynthSpec(n=30, o=o, seed=seed))
                trace = run_single(graph, gt, belief, make_policy("ts"), RANKING_T, (seed,), 0, 29)
                finals.append(trace.final_regret())
            means[o] = float(np.mean(finals))
        xs = np.array(edge_counts, dtype=float)
        ys = np.array([means[o] for o in edge_counts])
        slope = float(np.polyfit(xs, ys, 1)[0])
        ratio = means[400] / means[200]
        assert slope > 0.0
        assert ratio <= 2.2
        elapsed = time.perf_counter() - start
        print(
            f"\nPASS edge scaling: TS mean final regret {[round(means[o]) for o in edge_counts]} "
            f"over |E|={list(edge_counts)}, slope {slope:.2f} > 0, ratio(400/200) {ratio:.3f} <= 2.2 ({elapsed:.0f} s)"
        )


class TestPolicyRanking:
    def test_criterion(self, ranking_results):
        for network, (finals, _) in ranking_results.items():
            means = {p: float(np.mean(f)) for p, f in finals.items()}
            for rival in ("bayes-ucb", "greedy", "eps-greedy-0.1", "eps-greedy-0.5"):
                assert means["ts"] < means[rival], (network, rival, means)
            ordered = {p: round(means[p], 1) for p in RANKING_POLICIES}
            print(f"\nPASS policy ranking on {network}: TS lowest mean final regret {ordered}")


class TestTsRegretSaturation:
    def test_criterion(self, ranking_results):
        tenth = RANKING_T // 10
        for network, (_, series) in ranking_results.items():
            heads, tails = [], []
            for inst in series["ts"]:
                heads.append(inst[:tenth].sum())
                tails.append(inst[-tenth:].sum())
            head, tail = float(np.sum(heads)), float(np.sum(tails))
            assert tail < 0.2 * head, (network, head, tail)
            print(f"\nPASS TS saturation on {network}: last-10% regret {tail:.1f} < 20% of first-10% {head:.1f}")


class TestFleetBenefit:
    def test_criterion(self, toy, toy_prior):
        start = time.perf_counter()
        means = {}
        for K in (1, 2, 5):
            values = []
            for seed in range(20):
                gt = build_known_prior(toy, toy_prior, instance_stream((seed,)))
                trace = run_fleet(toy, gt, toy_prior.copy(), make_policy("ts"), 100, K, (seed,), TOY_SOURCE, TOY_TARGET)
                values.append(trace.mean_final_regret())
            means[K] = float(np.mean(values))
        assert means[2] <= 0.8 * means[1], means
        assert means[5] <= means[2], means
        elapsed = time.perf_counter() - start
        print(
            f"\nPASS fleet benefit: per-agent mean final regret K=1: {means[1]:.1f}, "
            f"K=2: {means[2]:.1f} (<= 0.8x), K=5: {means[5]:.1f} (<= K=2) ({elapsed:.0f} s)"
        )


class TestCorrelatedRobustness:
    def test_criterion(self, toy, toy_prior):
        start = time.perf_counter()
        means = {}
        for scenario, builder in (("independent", build_known_prior), ("correlated", build_correlated)):
            finals = []
            for seed in range(10):
                gt = builder(toy, toy_prior, instance_stream((seed,)))
                trace = run_single(toy, gt, toy_prior.copy(), make_policy("ts"), RANKING_T, (seed,), TOY_SOURCE, TOY_TARGET)
                finals.append(trace.final_regret())
            means[scenario] = float(np.mean(finals))
        ratio = means["correlated"] / means["independent"]
        assert 0.5 <= ratio <= 1.5, means
        elapsed = time.perf_counter() - start
        print(
            f"\nPASS correlated robustness: TS final regret correlated/independent = "
            f"{means['correlated']:.1f}/{means['independent']:.1f} = {ratio:.3f} within [0.5, 1.5] ({elapsed:.0f} s)"
        )
