"""Vehicle energy model and the per-edge probabilistic belief machinery.

The deterministic physics model turns edge geometry and a constant driving
speed into watt-hours. Two probabilistic models sit on top of it: a Gaussian
belief over the (negated) mean consumption whose positive edge weights come
from a rectified-Gaussian expectation, and a Log-Gaussian belief that keeps
the weight positive by construction. Both admit closed-form conjugate
updates.

Sign convention: rewards are negated energy, so belief means are negative
for consuming edges and edge weights handed to the path solver are positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from scipy import special

from .errors import ValidationError
from .graph import EdgeAttributes

# rectified-Gaussian agents
MODEL_RECT = "rect"
# Log-Gaussian agents
MODEL_LOG = "log"
MODEL_KINDS = (MODEL_RECT, MODEL_LOG)

# Floor for prior/noise variances, avoids degenerate beliefs on zero-energy edges.
VARIANCE_FLOOR = 1e-6
# Observed energy is clamped here before the log transform (regeneration has
# no support under the Log-Gaussian likelihood).
LOG_OBSERVATION_FLOOR_WH = 1e-3
# Tiny positive floor applied to solver weight vectors so extreme tail
# samples cannot underflow to an exactly-zero edge weight.
WEIGHT_FLOOR = 1e-12

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class VehicleParams:
    """Vehicle-specific constants of the longitudinal-dynamics energy model.

    Defaults are a medium-duty electric truck: curb weight plus half payload,
    with separate powertrain efficiencies for traction and regeneration.
    """

    mass_kg: float = 14750.0
    front_area_m2: float = 8.0
    drag_coeff: float = 0.7
    rolling_coeff: float = 0.0064
    efficiency_traction: float = 0.88
    efficiency_regen: float = 1.2
    gravity: float = 9.81
    air_density: float = 1.2

    def __post_init__(self):
        for name in (
            "mass_kg",
            "front_area_m2",
            "drag_coeff",
            "rolling_coeff",
            "efficiency_traction",
            "efficiency_regen",
            "gravity",
            "air_density",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be finite and > 0, got {value}")
        if self.efficiency_regen < self.efficiency_traction:
            raise ValidationError("efficiency_regen must be >= efficiency_traction")


def _drive_joules(attrs: EdgeAttributes, vp: VehicleParams, speed_mps: float) -> float:
    mg = vp.mass_kg * vp.gravity
    length = attrs.length_m
    grade = mg * length * math.sin(attrs.incline_rad)
    rolling = mg * vp.rolling_coeff * length * math.cos(attrs.incline_rad)
    drag = 0.5 * vp.drag_coeff * vp.front_area_m2 * vp.air_density * length * speed_mps * speed_mps
    return grade + rolling + drag


def prior_energy(attrs: EdgeAttributes, vp: VehicleParams, speed_mps: float, efficiency: float | None = None) -> float:
    """Constant-speed energy for one edge, in Wh.

    The caller chooses the powertrain efficiency; prior construction always
    uses the traction efficiency.
    """
    if not (math.isfinite(speed_mps) and speed_mps >= 0.0):
        raise ValidationError(f"speed must be finite and >= 0, got {speed_mps}")
    attrs.validate()
    eta = vp.efficiency_traction if efficiency is None else efficiency
    return _drive_joules(attrs, vp, speed_mps) / (3600.0 * eta)


def consumption_with_regen(attrs: EdgeAttributes, vp: VehicleParams, speed_mps: float) -> float:
    """Energy in Wh with the efficiency switched on the sign of the demand.

    Traction efficiency divides positive demand; regeneration efficiency
    (>= 1) shrinks the magnitude of recovered energy. Used by ground-truth
    reward generators only, never by agent-side priors.
    """
    joules = _drive_joules(attrs, vp, speed_mps)
    eta = vp.efficiency_traction if joules >= 0.0 else vp.efficiency_regen
    return joules / (3600.0 * eta)


def consumption_with_regen_array(attrs: EdgeAttributes, vp: VehicleParams, speeds: np.ndarray) -> np.ndarray:
    """Vectorized consumption_with_regen over many speeds for one edge."""
    speeds = np.asarray(speeds, dtype=float)
    mg = vp.mass_kg * vp.gravity
    length = attrs.length_m
    fixed = mg * length * math.sin(attrs.incline_rad) + mg * vp.rolling_coeff * length * math.cos(attrs.incline_rad)
    joules = fixed + 0.5 * vp.drag_coeff * vp.front_area_m2 * vp.air_density * length * speeds * speeds
    eta = np.where(joules >= 0.0, vp.efficiency_traction, vp.efficiency_regen)
    return joules / (3600.0 * eta)


# ---------------------------------------------------------------------------
# Scalar belief parameterizations and conjugate updates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian belief over one edge's mean reward, with fixed noise variance."""

    mu: float
    var: float
    noise_var: float

    def __post_init__(self):
        if not (self.var > 0.0 and math.isfinite(self.var)):
            raise ValidationError(f"var must be finite and > 0, got {self.var}")
        if not (self.noise_var > 0.0 and math.isfinite(self.noise_var)):
            raise ValidationError(f"noise_var must be finite and > 0, got {self.noise_var}")


@dataclass(frozen=True)
class LogGaussianBelief:
    """Gaussian belief over g = log(-theta) for one edge, plus the fixed
    log-scale noise shape of the matching Log-Gaussian likelihood."""

    log_mu: float
    log_var: float
    noise_shape: float
    psi: float

    def __post_init__(self):
        if not (self.log_var > 0.0 and math.isfinite(self.log_var)):
            raise ValidationError(f"log_var must be finite and > 0, got {self.log_var}")
        if not (self.noise_shape > 0.0 and math.isfinite(self.noise_shape)):
            raise ValidationError(f"noise_shape must be finite and > 0, got {self.noise_shape}")
        if not self.psi < 0.0:
            raise ValidationError(f"psi must be negative, got {self.psi}")


def init_prior(energy_wh: float, theta_factor: float, noise_var: float) -> GaussianBelief:
    """Gaussian prior from a deterministic energy estimate.

    mu = -E and var = (theta_factor * E)^2; a zero estimate would degenerate
    the variance, so it is floored at VARIANCE_FLOOR.
    """
    if not theta_factor > 0.0:
        raise ValidationError(f"theta_factor must be > 0, got {theta_factor}")
    var = (theta_factor * energy_wh) ** 2
    return GaussianBelief(mu=-energy_wh, var=max(var, VARIANCE_FLOOR), noise_var=max(noise_var, VARIANCE_FLOOR))


def gaussian_update(b: GaussianBelief, reward: float) -> GaussianBelief:
    """One conjugate update of the Gaussian belief with an observed reward."""
    if not math.isfinite(reward):
        raise ValidationError(f"reward must be finite, got {reward}")
    var = 1.0 / (1.0 / b.var + 1.0 / b.noise_var)
    mu = var * (b.mu / b.var + reward / b.noise_var)
    return replace(b, mu=mu, var=var)


def rectified_mean(theta: float, sigma: float) -> float:
    """E[max(0, X)] for X ~ N(-theta, sigma^2): the positive edge weight used
    in place of a possibly-negative expected consumption."""
    if sigma < 0.0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    m = -theta
    if sigma == 0.0:
        return max(0.0, m)
    z = m / sigma
    value = sigma * (math.exp(-0.5 * z * z) / _SQRT_2PI + z * special.ndtr(z))
    return max(0.0, float(value))


def rectified_mean_array(theta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), theta.shape)
    m = -theta
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, m / np.where(sigma > 0.0, sigma, 1.0), 0.0)
        smooth = sigma * (np.exp(-0.5 * z * z) / _SQRT_2PI + z * special.ndtr(z))
    out = np.where(sigma > 0.0, smooth, np.maximum(m, 0.0))
    return np.maximum(out, 0.0)


def lognormal_likelihood_params(theta: float, noise_var: float, psi: float) -> tuple[float, float]:
    """(location, scale^2) of the Log-Gaussian likelihood whose mean is -theta
    and whose variance matches noise_var * theta^2 / psi^2."""
    if not theta < 0.0:
        raise ValidationError(f"theta must be negative for the Log-Gaussian model, got {theta}")
    if psi == 0.0:
        raise ValidationError("psi must be nonzero")
    scale2 = math.log1p(noise_var / (psi * psi))
    location = math.log(-theta) - 0.5 * scale2
    return location, scale2


def lognormal_prior(mu0: float, var0: float, noise_var: float) -> LogGaussianBelief:
    """Log-Gaussian prior over -theta with mean -mu0 and variance var0.

    The reference scale psi is fixed to mu0, so the likelihood noise shape is
    log(1 + noise_var / mu0^2).
    """
    if not mu0 < 0.0:
        raise ValidationError(f"mu0 must be negative for the Log-Gaussian model, got {mu0}")
    if not var0 > 0.0:
        raise ValidationError(f"var0 must be > 0, got {var0}")
    log_var = math.log1p(var0 / (mu0 * mu0))
    log_mu = math.log(-mu0) - 0.5 * log_var
    noise_shape = math.log1p(noise_var / (mu0 * mu0))
    return LogGaussianBelief(log_mu=log_mu, log_var=log_var, noise_shape=max(noise_shape, VARIANCE_FLOOR), psi=mu0)


def lognormal_update(b: LogGaussianBelief, observed_energy_wh: float) -> LogGaussianBelief:
    """One conjugate update on the log scale with an observed energy (Wh).

    log(E) is a Gaussian observation of g - noise_shape/2 with variance
    noise_shape; shifting the observation by +noise_shape/2 reduces it to the
    standard Gaussian update on (log_mu, log_var).
    """
    if not math.isfinite(observed_energy_wh):
        raise ValidationError(f"observed energy must be finite, got {observed_energy_wh}")
    x = math.log(max(observed_energy_wh, LOG_OBSERVATION_FLOOR_WH)) + 0.5 * b.noise_shape
    log_var = 1.0 / (1.0 / b.log_var + 1.0 / b.noise_shape)
    log_mu = log_var * (b.log_mu / b.log_var + x / b.noise_shape)
    return replace(b, log_mu=log_mu, log_var=log_var)


def belief_to_weight(theta_tilde: float, kind: str, sigma: float = 0.0) -> float:
    """Positive edge weight from one sampled/estimated mean reward."""
    if kind == MODEL_RECT:
        return rectified_mean(theta_tilde, sigma)
    if kind == MODEL_LOG:
        if not theta_tilde < 0.0:
            raise ValidationError(f"Log-Gaussian weights need theta < 0, got {theta_tilde}")
        return -theta_tilde
    raise ValidationError(f"unknown model kind {kind!r}")


def gaussian_quantile(beta: float) -> float:
    """Standard-normal quantile."""
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"quantile level must be in (0, 1), got {beta}")
    return float(special.ndtri(beta))


# ---------------------------------------------------------------------------
# Per-edge belief arrays for a whole network
# ---------------------------------------------------------------------------


class BeliefState:
    """Posterior parameters for all edges of one run.

    Owned by a single run; fleets share one instance and serialize updates at
    the step barrier. ``update_count`` counts posterior-update events (one
    per call with at least one edge), which batching semantics are tested
    against.
    """

    def __init__(self, kind: str, **arrays: np.ndarray):
        if kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.update_count = 0
        for name, value in arrays.items():
            setattr(self, name, value)

    # -- constructors --------------------------------------------------

    @classmethod
    def gaussian(cls, mu0, var0, noise_var) -> "BeliefState":
        mu0 = np.array(mu0, dtype=float)
        var0 = np.maximum(np.array(var0, dtype=float), VARIANCE_FLOOR)
        noise_var = np.maximum(np.array(noise_var, dtype=float), VARIANCE_FLOOR)
        if not (mu0.shape == var0.shape == noise_var.shape):
            raise ValidationError("mu0, var0 and noise_var must have matching shapes")
        return cls(MODEL_RECT, mu=mu0, var=var0, noise_var=noise_var)

    @classmethod
    def log_gaussian(cls, mu0, var0, noise_var) -> "BeliefState":
        mu0 = np.array(mu0, dtype=float)
        var0 = np.maximum(np.array(var0, dtype=float), VARIANCE_FLOOR)
        noise_var = np.maximum(np.array(noise_var, dtype=float), VARIANCE_FLOOR)
        if np.any(mu0 >= 0.0):
            raise ValidationError("Log-Gaussian priors need strictly negative mean rewards on every edge")
        log_var = np.log1p(var0 / (mu0 * mu0))
        log_mu = np.log(-mu0) - 0.5 * log_var
        noise_shape = np.maximum(np.log1p(noise_var / (mu0 * mu0)), VARIANCE_FLOOR)
        return cls(MODEL_LOG, log_mu=log_mu, log_var=log_var, noise_shape=noise_shape, psi=mu0.copy())

    def copy(self) -> "BeliefState":
        if self.kind == MODEL_RECT:
            out = BeliefState(self.kind, mu=self.mu.copy(), var=self.var.copy(), noise_var=self.noise_var.copy())
        else:
            out = BeliefState(
                self.kind,
                log_mu=self.log_mu.copy(),
                log_var=self.log_var.copy(),
                noise_shape=self.noise_shape.copy(),
                psi=self.psi.copy(),
            )
        out.update_count = self.update_count
        return out

    @property
    def n_edges(self) -> int:
        return len(self.mu) if self.kind == MODEL_RECT else len(self.log_mu)

    # -- belief -> mean reward ------------------------------------------

    def posterior_theta(self) -> np.ndarray:
        """Posterior mean of the per-edge mean reward."""
        if self.kind == MODEL_RECT:
            return self.mu.copy()
        return -np.exp(self.log_mu + 0.5 * self.log_var)

    def sample_theta(self, rng: np.random.Generator) -> np.ndarray:
        """One independent posterior draw per edge."""
        z = rng.standard_normal(self.n_edges)
        if self.kind == MODEL_RECT:
            return self.mu + np.sqrt(self.var) * z
        return -np.exp(self.log_mu + np.sqrt(self.log_var) * z)

    def quantile_theta(self, beta: float) -> np.ndarray:
        """Per-edge mean reward at the beta quantile of the *energy* scale.

        beta < 1/2 yields optimistically low energy (theta above the mean).
        """
        z = gaussian_quantile(beta)
        if self.kind == MODEL_RECT:
            return self.mu - np.sqrt(self.var) * z
        return -np.exp(self.log_mu + np.sqrt(self.log_var) * z)

    def weights_from_theta(self, theta: np.ndarray) -> np.ndarray:
        """Positive solver weights for a vector of mean rewards."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == MODEL_RECT:
            w = rectified_mean_array(theta, np.sqrt(self.noise_var))
        else:
            if np.any(theta >= 0.0):
                raise ValidationError("Log-Gaussian weights need theta < 0 on every edge")
            w = -theta
        return np.maximum(w, WEIGHT_FLOOR)

    # -- conjugate updates ----------------------------------------------

    def update(self, rewards: Mapping[int, float]) -> None:
        """Apply one posterior update for every edge in ``rewards``."""
        if not rewards:
            return
        ids = sorted(rewards)
        r = np.array([rewards[e] for e in ids], dtype=float)
        if not np.all(np.isfinite(r)):
            raise ValidationError("rewards must all be finite")
        idx = np.asarray(ids, dtype=int)
        if self.kind == MODEL_RECT:
            var = 1.0 / (1.0 / self.var[idx] + 1.0 / self.noise_var[idx])
            self.mu[idx] = var * (self.mu[idx] / self.var[idx] + r / self.noise_var[idx])
            self.var[idx] = var
        else:
            energy = np.maximum(-r, LOG_OBSERVATION_FLOOR_WH)
            x = np.log(energy) + 0.5 * self.noise_shape[idx]
            log_var = 1.0 / (1.0 / self.log_var[idx] + 1.0 / self.noise_shape[idx])
            self.log_mu[idx] = log_var * (self.log_mu[idx] / self.log_var[idx] + x / self.noise_shape[idx])
            self.log_var[idx] = log_var
        self.update_count += 1
