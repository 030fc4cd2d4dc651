"""Weighted particle ensembles, likelihoods, resampling and a bootstrap filter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .noise import ParameterError, RngStream, density_gaussian, log_density_gaussian
from .ssm import StateSpaceModel

NORMALIZATION_TOL = 1e-12


class DegenerateEnsembleError(RuntimeError):
    """All importance weights are zero; the ensemble cannot be resampled."""


@dataclass
class ParticleEnsemble:
    particles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.particles.ndim != 1 or self.particles.shape != self.weights.shape:
            raise ValueError("particles and weights must be 1-d arrays of equal length")
        if len(self.particles) < 1:
            raise ValueError("an ensemble needs at least one particle")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @classmethod
    def uniform(cls, particles) -> "ParticleEnsemble":
        particles = np.asarray(particles, dtype=float)
        return cls(particles, np.full(len(particles), 1.0 / len(particles)))

    @classmethod
    def point_mass(cls, x: float, n: int) -> "ParticleEnsemble":
        return cls.uniform(np.full(n, float(x)))

    def __len__(self) -> int:
        return len(self.particles)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.particles))

    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights**2))

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.particles.copy(), self.weights.copy())


def normalize(weights: np.ndarray) -> np.ndarray:
    total = weights.sum()
    if not total > 0:
        raise DegenerateEnsembleError("cannot normalize an all-zero weight vector")
    return weights / total


def normalize_log(log_weights: np.ndarray) -> np.ndarray:
    """Normalized linear weights from log weights (log-sum-exp shift)."""
    top = np.max(log_weights)
    if not np.isfinite(top):
        raise DegenerateEnsembleError("all log-weights are -inf")
    w = np.exp(log_weights - top)
    return w / w.sum()


def likelihood_nonoutlier(e, R: float):
    """Gaussian measurement likelihood N(e | 0, R)."""
    return density_gaussian(e, R)


def log_likelihood_nonoutlier(e, R: float):
    return log_density_gaussian(e, R)


def likelihood_outlier(e, lb: float, ub: float):
    """Uniform density 1/(ub - lb) on the closed interval [lb, ub], else 0."""
    if not ub > lb:
        raise ParameterError(f"degenerate outlier range: lb={lb}, ub={ub}")
    e = np.asarray(e, dtype=float)
    out = np.where((e >= lb) & (e <= ub), 1.0 / (ub - lb), 0.0)
    return float(out) if out.ndim == 0 else out


def _resample_indices(weights: np.ndarray, positions: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    total = cdf[-1]
    if not total > 0:
        raise DegenerateEnsembleError("cannot resample an all-zero weight vector")
    idx = np.searchsorted(cdf, positions * total, side="right")
    # positions < 1, but cdf roundoff can leave the last bin short
    return np.minimum(idx, len(weights) - 1)


def resample_multinomial(ens: ParticleEnsemble, rng: RngStream) -> ParticleEnsemble:
    n = len(ens)
    idx = _resample_indices(ens.weights, rng.uniform(n))
    return ParticleEnsemble.uniform(ens.particles[idx])


def resample_systematic(ens: ParticleEnsemble, rng: RngStream) -> ParticleEnsemble:
    n = len(ens)
    positions = (rng.uniform() + np.arange(n)) / n
    idx = _resample_indices(ens.weights, positions)
    return ParticleEnsemble.uniform(ens.particles[idx])


RESAMPLERS: dict = {
    "multinomial": resample_multinomial,
    "systematic": resample_systematic,
}

Resampler = Callable[[ParticleEnsemble, RngStream], ParticleEnsemble]


def get_resampler(name: str) -> Resampler:
    try:
        return RESAMPLERS[name]
    except KeyError:
        raise ParameterError(f"unknown resampler {name!r}; expected one of {sorted(RESAMPLERS)}") from None


def maybe_resample(ens: ParticleEnsemble, rng: RngStream, resampler: Resampler,
                   ess_threshold: Optional[float] = None) -> ParticleEnsemble:
    """Resample unconditionally, or only when ESS < ess_threshold * N."""
    if ess_threshold is not None and ens.effective_sample_size() >= ess_threshold * len(ens):
        return ens
    return resampler(ens, rng)


def propagate(particles: np.ndarray, model: StateSpaceModel, k: int, rng: RngStream) -> np.ndarray:
    """Draw x_hat = f(x, k) + u for every particle, u from the process-noise law."""
    particles = np.asarray(particles, dtype=float)
    noise = np.asarray(model.process_noise.sample(rng, particles.shape), dtype=float)
    return np.asarray(model.f(particles, k), dtype=float) + noise


def bootstrap_pf_step(ens: ParticleEnsemble, y: float, model: StateSpaceModel, k: int,
                      rng: RngStream, *, propagate_first: bool = True,
                      resampler: Resampler = resample_multinomial,
                      ess_threshold: Optional[float] = None,
                      ) -> Tuple[ParticleEnsemble, float, bool]:
    """One bootstrap PF iteration at time ``k``.

    Particles are moved with ``f(., k - 1)`` (skipped when ``propagate_first``
    is false, e.g. for the initial prior at k=1), weighted by the Gaussian
    likelihood only, and resampled.  Weights are normalized in the log domain.

    Returns the resampled ensemble, the posterior mean before resampling and
    a flag that is set when every likelihood is exactly zero, in which case
    the prior weights are kept.
    """
    x_hat = propagate(ens.particles, model, k - 1, rng) if propagate_first else ens.particles.copy()
    e = y - np.asarray(model.h(x_hat, k), dtype=float)
    with np.errstate(divide="ignore"):
        log_w = np.log(ens.weights) + log_likelihood_nonoutlier(e, model.R)
    degenerate = not np.isfinite(np.max(log_w))
    weights = ens.weights.copy() if degenerate else normalize_log(log_w)
    posterior = ParticleEnsemble(x_hat, weights)
    estimate = posterior.mean()
    return maybe_resample(posterior, rng, resampler, ess_threshold), estimate, degenerate
