"""Particle filtering with incremental learning of the measurement-outlier range."""

from .filtering import (
    FilterParams,
    HypothesisPosterior,
    IlapfState,
    RunMetrics,
    StepReport,
    extract_outlier_value,
    hypothesis_posterior,
    hypothesis_weights,
    ilapf_step,
    mix_weights,
    run_bootstrap,
    run_filter,
)
from .noise import Gamma, Gaussian, GaussianMixture, ParameterError, RngStream, StudentT, Uniform
from .ore import OutlierRangeEstimator
from .particles import ParticleEnsemble, bootstrap_pf_step, resample_multinomial, resample_systematic
from .ssm import ScenarioConfig, StateSpaceModel, Trajectory, benchmark_model, benchmark_scenario, simulate

__version__ = "0.1.0"
