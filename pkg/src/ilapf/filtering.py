"""Incremental learning assisted particle filter.

Each step weighs the propagated particles under two measurement hypotheses,
nominal Gaussian noise (o=0) and outlier noise uniform on the learned range
(o=1), mixes the per-hypothesis weights by their posterior probabilities and
feeds detected outliers to an :class:`~ilapf.ore.OutlierRangeEstimator`.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from .noise import NoiseLaw, RngStream
from .ore import OutlierRangeEstimator
from .particles import (
    ParticleEnsemble,
    Resampler,
    bootstrap_pf_step,
    get_resampler,
    likelihood_outlier,
    log_likelihood_nonoutlier,
    maybe_resample,
    normalize,
    normalize_log,
    propagate,
)
from .ssm import ScenarioConfig, StateSpaceModel, Trajectory, simulate

TRACE_HEADER = ["k", "x_true", "y", "x_hat", "pi1", "outlier_declared", "lb_hat", "ub_hat", "degenerate"]


@dataclass(frozen=True)
class HypothesisPosterior:
    pi0: float
    pi1: float

    @property
    def is_outlier(self) -> bool:
        return self.pi1 > 0.5


@dataclass
class IlapfState:
    ensemble: ParticleEnsemble
    ore: OutlierRangeEstimator
    k: int = 0  # last processed time index

    @property
    def n(self) -> int:
        return self.ore.n


@dataclass(frozen=True)
class StepReport:
    estimate: float
    pi1: float
    outlier_declared: bool
    bounds: Tuple[float, float]
    degenerate: bool = False


def _hypothesis_log0_and_w1(x_hat, prior_weights, y, model, k, bounds):
    e = y - np.asarray(model.h(x_hat, k), dtype=float)
    with np.errstate(divide="ignore"):
        log_w0 = np.log(prior_weights) + log_likelihood_nonoutlier(e, model.R)
    w1 = prior_weights * likelihood_outlier(e, *bounds)
    return log_w0, w1


def hypothesis_weights(x_hat, prior_weights, y: float, model: StateSpaceModel, k: int,
                       bounds: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Unnormalized weights ``prior * p(y | x_hat, o=m)`` for m = 0, 1."""
    log_w0, w1 = _hypothesis_log0_and_w1(np.asarray(x_hat, dtype=float),
                                         np.asarray(prior_weights, dtype=float), y, model, k, bounds)
    return np.exp(log_w0), w1


def hypothesis_posterior(w0, w1) -> Optional[HypothesisPosterior]:
    """Posterior probabilities of the two hypotheses under a 0.5/0.5 prior.

    Returns None when both hypothesis likelihoods are zero.
    """
    L0 = float(np.sum(w0))
    L1 = float(np.sum(w1))
    total = L0 + L1
    if not total > 0:
        return None
    pi1 = L1 / total
    return HypothesisPosterior(1.0 - pi1, pi1)


def _mix(tilde0: Optional[np.ndarray], tilde1: Optional[np.ndarray],
         post: HypothesisPosterior) -> np.ndarray:
    if post.pi1 == 0:
        return tilde0.copy()
    if post.pi0 == 0:
        return tilde1.copy()
    return normalize(post.pi0 * tilde0 + post.pi1 * tilde1)


def mix_weights(w0, w1, post: HypothesisPosterior) -> np.ndarray:
    """Posterior-weighted average of the per-hypothesis normalized weights."""
    w0 = np.asarray(w0, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    tilde0 = normalize(w0) if post.pi0 > 0 else None
    tilde1 = normalize(w1) if post.pi1 > 0 else None
    return _mix(tilde0, tilde1, post)


def extract_outlier_value(x_hat, weights, y: float, model: StateSpaceModel, k: int) -> float:
    """Residual of ``y`` against the ``weights``-averaged predicted measurement.

    With the prior weights this is the prior-predictive residual; with the
    normalized outlier-hypothesis weights it is the posterior mean of the
    noise given that ``y`` is an outlier.
    """
    predicted = float(np.dot(weights, np.asarray(model.h(np.asarray(x_hat, dtype=float), k))))
    return float(y) - predicted


OUTLIER_VALUE_MODES = ("posterior", "prior")


def ilapf_step(state: IlapfState, y: float, model: StateSpaceModel, rng: RngStream, *,
               resampler: Resampler = None, ess_threshold: Optional[float] = None,
               outlier_value: str = "posterior") -> Tuple[IlapfState, StepReport]:
    """Advance the filter by one time step and absorb measurement ``y``.

    At k=1 the stored ensemble is taken as the prior itself and is not
    propagated.  When both hypotheses have zero likelihood the measurement is
    declared an outlier and the prior weights are carried forward.

    ``outlier_value`` selects the residual fed to the range estimator on a
    detection: ``"posterior"`` averages over the outlier-hypothesis weights,
    ``"prior"`` over the prior weights.  Degenerate steps always use the prior.
    """
    if outlier_value not in OUTLIER_VALUE_MODES:
        raise ValueError(f"outlier_value must be one of {OUTLIER_VALUE_MODES}, got {outlier_value!r}")
    resampler = resampler or get_resampler("multinomial")
    k = state.k + 1
    ens = state.ensemble
    prior_w = ens.weights
    x_hat = propagate(ens.particles, model, k - 1, rng) if k > 1 else ens.particles.copy()

    bounds = state.ore.bounds()
    log_w0, w1 = _hypothesis_log0_and_w1(x_hat, prior_w, y, model, k, bounds)
    post = hypothesis_posterior(np.exp(log_w0), w1)

    degenerate = post is None
    tilde1 = None
    if degenerate:
        weights = prior_w.copy()
        pi1 = 1.0
        declared = True
    else:
        tilde0 = normalize_log(log_w0) if post.pi0 > 0 else None
        tilde1 = normalize(w1) if post.pi1 > 0 else None
        weights = _mix(tilde0, tilde1, post)
        pi1 = post.pi1
        declared = post.is_outlier

    ore = state.ore
    if declared:
        z_weights = tilde1 if outlier_value == "posterior" and tilde1 is not None else prior_w
        ore = ore.copy().observe(extract_outlier_value(x_hat, z_weights, y, model, k))

    posterior = ParticleEnsemble(x_hat, weights)
    estimate = posterior.mean()
    new_ens = maybe_resample(posterior, rng, resampler, ess_threshold)
    report = StepReport(estimate, pi1, declared, ore.bounds(), degenerate)
    return IlapfState(new_ens, ore, k), report


@dataclass(frozen=True)
class FilterParams:
    particles: int = 200
    lb0: float = 0.0
    ub0: float = 70.0
    I: float = 20.0
    ore_mode: str = "extrema"
    resampler: str = "multinomial"
    ess_threshold: Optional[float] = None
    outlier_value: str = "posterior"
    initial_law: Optional[NoiseLaw] = None  # used when the scenario has no known x1

    def new_estimator(self) -> OutlierRangeEstimator:
        return OutlierRangeEstimator(self.lb0, self.ub0, self.I, self.ore_mode)


@dataclass
class RunMetrics:
    mse: float
    k: np.ndarray
    x_true: np.ndarray
    y: np.ndarray
    x_hat: np.ndarray
    pi1: np.ndarray
    outlier_declared: np.ndarray
    lb_hat: np.ndarray
    ub_hat: np.ndarray
    degenerate: np.ndarray
    seconds: float = 0.0
    final_bounds: Tuple[float, float] = (0.0, 0.0)
    final_n: int = 0
    ore: Optional[OutlierRangeEstimator] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.k)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for i in range(len(self)):
                writer.writerow([
                    int(self.k[i]), repr(float(self.x_true[i])), repr(float(self.y[i])),
                    repr(float(self.x_hat[i])), repr(float(self.pi1[i])),
                    int(self.outlier_declared[i]), repr(float(self.lb_hat[i])),
                    repr(float(self.ub_hat[i])), int(self.degenerate[i]),
                ])


def mse(estimates, truth) -> float:
    d = np.asarray(estimates, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.mean(d * d))


def _initial_ensemble(config: ScenarioConfig, params: FilterParams, rng: RngStream) -> ParticleEnsemble:
    if params.initial_law is None:
        return ParticleEnsemble.point_mass(config.x1, params.particles)
    return ParticleEnsemble.uniform(params.initial_law.sample(rng, params.particles))


WarmStart = Union[OutlierRangeEstimator, Mapping, None]


def _warm_estimator(params: FilterParams, warm_start: WarmStart) -> OutlierRangeEstimator:
    if warm_start is None:
        return params.new_estimator()
    if isinstance(warm_start, OutlierRangeEstimator):
        return warm_start.copy()
    return OutlierRangeEstimator.from_record(warm_start, params.I, params.ore_mode)


def _metrics(traj: Trajectory, x_hat, pi1, declared, lb, ub, degenerate, seconds,
             ore: Optional[OutlierRangeEstimator]) -> RunMetrics:
    K = len(traj)
    bounds = ore.bounds() if ore is not None else (float("nan"), float("nan"))
    return RunMetrics(
        mse=mse(x_hat, traj.x), k=np.arange(1, K + 1), x_true=traj.x.copy(), y=traj.y.copy(),
        x_hat=np.asarray(x_hat), pi1=np.asarray(pi1), outlier_declared=np.asarray(declared, dtype=bool),
        lb_hat=np.asarray(lb), ub_hat=np.asarray(ub), degenerate=np.asarray(degenerate, dtype=bool),
        seconds=seconds, final_bounds=bounds, final_n=ore.n if ore is not None else 0, ore=ore,
    )


def run_filter(config: ScenarioConfig, params: FilterParams = FilterParams(),
               rng: Optional[RngStream] = None, warm_start: WarmStart = None,
               trajectory: Optional[Trajectory] = None) -> RunMetrics:
    """Filter one trajectory with ILAPF.

    The trajectory is simulated from ``config`` with ``rng.derive(0)`` unless
    given; the filter itself draws from ``rng.derive(1)``.
    """
    rng = rng or RngStream(config.seed)
    traj = trajectory if trajectory is not None else simulate(config, rng.derive(0))
    frng = rng.derive(1)
    resampler = get_resampler(params.resampler)

    start = time.perf_counter()
    state = IlapfState(_initial_ensemble(config, params, frng), _warm_estimator(params, warm_start))
    reports = []
    for y in traj.y:
        state, report = ilapf_step(state, float(y), config.model, frng,
                                   resampler=resampler, ess_threshold=params.ess_threshold,
                                   outlier_value=params.outlier_value)
        reports.append(report)
    seconds = time.perf_counter() - start

    return _metrics(
        traj,
        [r.estimate for r in reports], [r.pi1 for r in reports],
        [r.outlier_declared for r in reports],
        [r.bounds[0] for r in reports], [r.bounds[1] for r in reports],
        [r.degenerate for r in reports], seconds, state.ore,
    )


def run_bootstrap(config: ScenarioConfig, params: FilterParams = FilterParams(),
                  rng: Optional[RngStream] = None,
                  trajectory: Optional[Trajectory] = None) -> RunMetrics:
    """Non-robust baseline on the same trajectory; filter draws from ``rng.derive(2)``."""
    rng = rng or RngStream(config.seed)
    traj = trajectory if trajectory is not None else simulate(config, rng.derive(0))
    frng = rng.derive(2)
    resampler = get_resampler(params.resampler)

    start = time.perf_counter()
    ens = _initial_ensemble(config, params, frng)
    estimates, flags = [], []
    for i, y in enumerate(traj.y):
        k = i + 1
        ens, est, degenerate = bootstrap_pf_step(ens, float(y), config.model, k, frng,
                                                 propagate_first=k > 1, resampler=resampler,
                                                 ess_threshold=params.ess_threshold)
        estimates.append(est)
        flags.append(degenerate)
    seconds = time.perf_counter() - start

    K = len(traj)
    nan = np.full(K, np.nan)
    return _metrics(traj, estimates, np.zeros(K), np.zeros(K, dtype=bool), nan, nan, flags,
                    seconds, None)
