"""Scalar state-space models and synthetic trajectory generation.

The model is

    x[k+1] = f(x[k], k) + u[k]
    y[k]   = h(x[k], k) + n[k]

with ``f`` and ``h`` allowed to depend on the time index.  ``n[k]`` is the
nominal Gaussian noise except at scheduled outlier steps, where it is drawn
from the outlier law instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, FrozenSet, Iterable, Optional

import numpy as np

from .noise import Gamma, Gaussian, NoiseLaw, ParameterError, RngStream, Uniform

OUTLIER_STEPS = frozenset({7, 8, 9, 20, 37, 38, 39, 50})
DEFAULT_HORIZON = 60
SWITCH_STEP = 30

TransitionFn = Callable[[np.ndarray, int], np.ndarray]
MeasurementFn = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class StateSpaceModel:
    transition: TransitionFn
    measurement: MeasurementFn
    process_noise: NoiseLaw
    R: float
    name: str = "custom"

    def __post_init__(self):
        if not self.R > 0:
            raise ParameterError(f"measurement noise variance R must be > 0, got {self.R}")

    def f(self, x, k: int):
        return self.transition(x, k)

    def h(self, x, k: int):
        return self.measurement(x, k)


def _benchmark_transition(x, k):
    return 1.0 + np.sin(0.04 * np.pi * (k + 1)) + 0.5 * x


def _benchmark_measurement(x, k):
    if k <= SWITCH_STEP:
        return 0.2 * np.square(x)
    return 0.2 * x - 2.0


def benchmark_model(process_noise: Optional[NoiseLaw] = None, R: float = 0.01) -> StateSpaceModel:
    """The nonlinear time-series benchmark with a measurement switch after k=30.

    ``process_noise`` defaults to :func:`default_process_noise`.
    """
    if process_noise is None:
        process_noise = default_process_noise()
    return StateSpaceModel(_benchmark_transition, _benchmark_measurement, process_noise, R, name="benchmark")


def default_process_noise(gamma_shape: float = 3.0, gamma_param: float = 2.0,
                          convention: str = "rate") -> Gamma:
    """Gamma(3, 2) process noise.

    ``convention`` picks how the second parameter is read: ``"rate"`` (mean
    1.5, the default) or ``"scale"`` (mean 6).
    """
    if convention == "rate":
        return Gamma.from_rate(gamma_shape, gamma_param)
    if convention == "scale":
        return Gamma(gamma_shape, gamma_param)
    raise ParameterError(f"unknown gamma convention {convention!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    model: StateSpaceModel
    horizon: int = DEFAULT_HORIZON
    x1: float = 1.0
    outlier_steps: FrozenSet[int] = OUTLIER_STEPS
    outlier_law: NoiseLaw = field(default_factory=lambda: Uniform(20.0, 30.0))
    clean_noise: Optional[NoiseLaw] = None  # defaults to Gaussian(0, model.R)
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {self.horizon}")
        steps = frozenset(int(k) for k in self.outlier_steps)
        object.__setattr__(self, "outlier_steps", steps)
        bad = [k for k in steps if not 1 <= k <= self.horizon]
        if bad:
            raise ParameterError(f"outlier steps outside 1..{self.horizon}: {sorted(bad)}")
        if self.clean_noise is None:
            object.__setattr__(self, "clean_noise", Gaussian(0.0, self.model.R))


def benchmark_scenario(seed: int = 0, **overrides) -> ScenarioConfig:
    model = overrides.pop("model", None) or benchmark_model()
    return ScenarioConfig(model=model, seed=seed, **overrides)


@dataclass
class Trajectory:
    x: np.ndarray
    y: np.ndarray
    is_outlier: np.ndarray

    def __post_init__(self):
        if not (len(self.x) == len(self.y) == len(self.is_outlier)):
            raise ValueError("trajectory arrays must have equal length")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "x_true", "y", "is_outlier"])
            for k, x, y, o in zip(self.steps, self.x, self.y, self.is_outlier):
                writer.writerow([int(k), repr(float(x)), repr(float(y)), int(bool(o))])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            x=np.array([float(r["x_true"]) for r in rows]),
            y=np.array([float(r["y"]) for r in rows]),
            is_outlier=np.array([bool(int(r["is_outlier"])) for r in rows]),
        )


def simulate(config: ScenarioConfig, rng: Optional[RngStream] = None) -> Trajectory:
    """Generate states, measurements and ground-truth outlier flags.

    Draw order per step is fixed: measurement noise, then process noise.
    """
    if rng is None:
        rng = RngStream(config.seed)
    K = config.horizon
    model = config.model
    x = np.empty(K)
    y = np.empty(K)
    flags = np.zeros(K, dtype=bool)
    x[0] = config.x1
    for i in range(K):
        k = i + 1
        if k in config.outlier_steps:
            flags[i] = True
            noise = config.outlier_law.sample(rng)
        else:
            noise = config.clean_noise.sample(rng)
        y[i] = float(model.h(x[i], k)) + float(noise)
        if k < K:
            x[i + 1] = float(model.f(x[i], k)) + float(model.process_noise.sample(rng))
    return Trajectory(x, y, flags)


def residuals(traj: Trajectory, model: StateSpaceModel) -> np.ndarray:
    """Measurement noise realizations y[k] - h(x[k], k)."""
    return np.array([traj.y[i] - float(model.h(traj.x[i], i + 1)) for i in range(len(traj))])


def write_trajectories(trajs: Iterable[Trajectory], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, traj in enumerate(trajs):
        traj.to_csv(out / f"trajectory_{i:03d}.csv")


__all__ = [
    "DEFAULT_HORIZON",
    "OUTLIER_STEPS",
    "ScenarioConfig",
    "StateSpaceModel",
    "Trajectory",
    "default_process_noise",
    "benchmark_model",
    "benchmark_scenario",
    "residuals",
    "simulate",
]
