"""Seedable random streams and the noise laws used by the benchmark.

Every sampler draws from an :class:`RngStream`, a thin wrapper around a numpy
``Generator`` whose seed material is a (seed, stream-id...) tuple.  Streams
derived from different id tuples are statistically independent and never
share state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


class ParameterError(ValueError):
    """Raised when a distribution or likelihood receives invalid parameters."""


class RngStream:
    """Deterministic random stream identified by ``seed`` and ``stream_id``."""

    def __init__(self, seed: int, stream_id: Tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self.stream_id = tuple(int(s) for s in stream_id)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def derive(self, *ids: int) -> "RngStream":
        """Child stream keyed by this stream's id plus ``ids``.

        Derivation is a pure function of (seed, id tuple); it does not consume
        draws from the parent.
        """
        return RngStream(self.seed, self.stream_id + tuple(ids))

    def integers(self, n: int) -> np.ndarray:
        """Raw 64-bit integer output, used for reproducibility checks."""
        return self.generator.integers(0, 2**63 - 1, size=n, dtype=np.int64, endpoint=True)

    def uniform(self, size=None):
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


Size = Union[None, int, Tuple[int, ...]]


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if not self.variance >= 0:
            raise ParameterError(f"Gaussian variance must be >= 0, got {self.variance}")

    def sample(self, rng: RngStream, size: Size = None):
        # variance 0 is a point mass; still consume draws so stream alignment
        # does not depend on the parameter values
        z = rng.generator.standard_normal(size)
        return self.mean + math.sqrt(self.variance) * z

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ParameterError(f"Uniform requires low < high, got ({self.low}, {self.high})")

    def sample(self, rng: RngStream, size: Size = None):
        return self.low + (self.high - self.low) * rng.generator.random(size)

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def variance(self) -> float:
        return (self.high - self.low) ** 2 / 12.0


@dataclass(frozen=True)
class Gamma:
    """Gamma law in the shape/scale parameterization (mean = shape * scale).

    Use :meth:`from_rate` for the shape/rate convention.
    """

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ParameterError(
                f"Gamma requires shape > 0 and scale > 0, got ({self.shape}, {self.scale})"
            )

    @classmethod
    def from_rate(cls, shape: float, rate: float) -> "Gamma":
        if not rate > 0:
            raise ParameterError(f"Gamma rate must be > 0, got {rate}")
        return cls(shape, 1.0 / rate)

    def sample(self, rng: RngStream, size: Size = None):
        # numpy uses the Marsaglia-Tsang squeeze/rejection method
        return rng.generator.gamma(self.shape, self.scale, size)

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2


@dataclass(frozen=True)
class StudentT:
    """Location-scale Student's t.

    With ``unit_std=True`` the ``scale`` argument is read as the standard
    deviation instead (requires ``dof > 2``).
    """

    dof: float
    location: float = 0.0
    scale: float = 1.0
    unit_std: bool = False

    def __post_init__(self):
        if not (self.dof > 0 and self.scale > 0):
            raise ParameterError(
                f"StudentT requires dof > 0 and scale > 0, got ({self.dof}, {self.scale})"
            )
        if self.unit_std and not self.dof > 2:
            raise ParameterError("standard deviation is undefined for dof <= 2")

    @property
    def effective_scale(self) -> float:
        if self.unit_std:
            return self.scale * math.sqrt((self.dof - 2.0) / self.dof)
        return self.scale

    def sample(self, rng: RngStream, size: Size = None):
        return self.location + self.effective_scale * rng.generator.standard_t(self.dof, size)

    @property
    def mean(self) -> float:
        return self.location if self.dof > 1 else math.nan

    @property
    def variance(self) -> float:
        if self.dof <= 2:
            return math.inf
        return self.effective_scale**2 * self.dof / (self.dof - 2.0)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class GaussianMixture:
    components: Tuple[Tuple[float, float, float], ...]  # (weight, mean, variance)

    def __post_init__(self):
        comps = tuple(tuple(float(v) for v in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ParameterError("GaussianMixture needs at least one component")
        weights = [w for w, _, _ in comps]
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ParameterError(f"mixture weights must be >= 0 and sum to 1, got {weights}")
        if any(v < 0 for _, _, v in comps):
            raise ParameterError("mixture component variances must be >= 0")

    def sample(self, rng: RngStream, size: Size = None):
        w = np.array([c[0] for c in self.components])
        mu = np.array([c[1] for c in self.components])
        sd = np.sqrt([c[2] for c in self.components])
        idx = rng.generator.choice(len(w), size=size, p=w)
        z = rng.generator.standard_normal(size)
        out = mu[idx] + sd[idx] * z
        return float(out) if size is None else out

    @property
    def mean(self) -> float:
        return sum(w * m for w, m, _ in self.components)

    @property
    def variance(self) -> float:
        mu = self.mean
        return sum(w * (v + (m - mu) ** 2) for w, m, v in self.components)


NoiseLaw = Union[Gaussian, Uniform, Gamma, StudentT, GaussianMixture]


def sample(law: NoiseLaw, rng: RngStream, size: Size = None):
    """Draw from ``law``; a scalar when ``size`` is None."""
    out = law.sample(rng, size)
    return float(out) if size is None else np.asarray(out, dtype=float)


def log_density_gaussian(e, variance: float):
    """Log of N(e | 0, variance); works elementwise on arrays."""
    if not variance > 0:
        raise ParameterError(f"variance must be > 0, got {variance}")
    e = np.asarray(e, dtype=float)
    out = -0.5 * (LOG_2PI + math.log(variance)) - 0.5 * e * e / variance
    return float(out) if out.ndim == 0 else out


def density_gaussian(e, variance: float):
    """N(e | 0, variance); underflows to 0 far in the tail."""
    out = np.exp(log_density_gaussian(e, variance))
    return float(out) if np.ndim(out) == 0 else out


def mixture(components: Sequence[Tuple[float, float, float]]) -> GaussianMixture:
    return GaussianMixture(tuple(components))
