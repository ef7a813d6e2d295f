"""Adversarial synthetic DAG instances with deceptive priors.

A chain u_0 -> u_1 -> ... -> u_{n-1} is always the true optimum; the extra
forward "shortcut" edges cost slightly more per skipped chain segment but
the prior cannot tell, since every source-to-target path has exactly the
same prior expected cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import BeliefState
from .environment import GT_GAUSSIAN, GroundTruth
from .errors import ValidationError
from .graph import EdgeAttributes, RoadGraph

CHAIN_MEAN_REWARD = -10.0
SHORTCUT_RATE = 11.0
NOISE_VAR = 4.0
PRIOR_VAR = 8.0

# Synthetic edges carry placeholder physical attributes; runs on these
# instances never consult the physics model.
_PLACEHOLDER = dict(length_m=1.0, incline_rad=0.0, speed_limit_mps=13.89, mean_speed_mps=13.89, speed_var=0.0)


@dataclass(frozen=True)
class SynthSpec:
    """Instance size: n vertices, o edges total (chain included)."""

    n: int
    o: int
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"need at least 2 vertices, got {self.n}")
        if not self.n - 1 <= self.o <= self.n * (self.n - 1) // 2:
            raise ValidationError(f"edge count {self.o} outside [{self.n - 1}, {self.n * (self.n - 1) // 2}] for n={self.n}")


def generate(spec: SynthSpec) -> tuple[RoadGraph, GroundTruth, BeliefState]:
    """Build the instance: chain edges first, then o-(n-1) distinct shortcuts
    (u_h, u_h') with h' > h+1 drawn uniformly without replacement.

    True mean rewards: -10 per chain edge, -11*(h'-h) per shortcut. The prior
    mean is -11*(h'-h) for every edge (chain edges skip one vertex index), so
    all paths tie under the prior while the chain wins under the truth.
    """
    n, o = spec.n, spec.o
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0x5D)))

    spans = [(h, h + 1) for h in range(n - 1)]
    candidates = [(h, h2) for h in range(n) for h2 in range(h + 2, n)]
    extra = o - (n - 1)
    if extra > len(candidates):
        raise ValidationError("edge budget exceeds the number of distinct forward pairs")
    if extra:
        chosen = rng.choice(len(candidates), size=extra, replace=False)
        spans += sorted(candidates[i] for i in chosen)

    edges = [(u, v, EdgeAttributes(**_PLACEHOLDER)) for u, v in spans]
    graph = RoadGraph(n, edges)

    skip = np.array([v - u for u, v in spans], dtype=float)
    theta = np.where(skip == 1.0, CHAIN_MEAN_REWARD, -SHORTCUT_RATE * skip)
    prior_mu = -SHORTCUT_RATE * skip
    gt = GroundTruth(kind=GT_GAUSSIAN, theta_star=theta, sigma=np.full(o, np.sqrt(NOISE_VAR)))
    belief = BeliefState.gaussian(prior_mu, np.full(o, PRIOR_VAR), np.full(o, NOISE_VAR))
    return graph, gt, belief
