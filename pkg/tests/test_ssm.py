import numpy as np
import pytest

from ilapf.noise import Gamma, Gaussian, ParameterError, RngStream
from ilapf.ssm import (
    OUTLIER_STEPS,
    ScenarioConfig,
    Trajectory,
    default_process_noise,
    benchmark_model,
    benchmark_scenario,
    residuals,
    simulate,
)

F_1_1 = 1.74868988716485478824228374601  # 1.5 + sin(0.08 pi), mpmath


def test_benchmark_transition_and_measurement():
    m = benchmark_model()
    assert m.f(1.0, 1) == pytest.approx(F_1_1, abs=1e-12)
    assert m.h(2.0, 10) == pytest.approx(0.8)
    assert m.h(2.0, 30) == pytest.approx(0.8)
    assert m.h(2.0, 31) == pytest.approx(-1.6)
    assert m.R == 0.01


def test_process_noise_conventions():
    assert default_process_noise().mean == 1.5
    assert default_process_noise(convention="scale").mean == 6.0
    with pytest.raises(ParameterError):
        default_process_noise(convention="shape")


def _zero_noise_config(**kw):
    model = benchmark_model(process_noise=Gaussian(0, 0))
    return ScenarioConfig(model=model, clean_noise=Gaussian(0, 0), outlier_steps=frozenset(), **kw)


def test_degenerate_noise_single_step():
    traj = simulate(_zero_noise_config(horizon=1), RngStream(0))
    assert traj.x[0] == 1.0
    assert traj.y[0] == pytest.approx(0.2)


def test_zero_noise_follows_transition():
    cfg = _zero_noise_config(horizon=5)
    traj = simulate(cfg, RngStream(0))
    for i in range(4):
        assert traj.x[i + 1] == pytest.approx(cfg.model.f(traj.x[i], i + 1))


def test_outlier_residuals_in_support():
    for seed in range(20):
        cfg = benchmark_scenario()
        traj = simulate(cfg, RngStream(seed))
        e = residuals(traj, cfg.model)
        assert set(np.flatnonzero(traj.is_outlier) + 1) == set(OUTLIER_STEPS)
        assert np.all((e[traj.is_outlier] >= 20) & (e[traj.is_outlier] <= 30))
        assert np.all(np.abs(e[~traj.is_outlier]) <= 0.5)


def test_clean_residual_moments():
    cfg = benchmark_scenario()
    e = np.concatenate([residuals(t, cfg.model)[~t.is_outlier]
                        for t in (simulate(cfg, RngStream(s)) for s in range(200))])
    n = len(e)
    assert abs(e.mean()) < 5 * 0.1 / np.sqrt(n)
    # var of sample variance for a Gaussian: 2 sigma^4 / n
    assert abs(e.var() - 0.01) < 5 * np.sqrt(2 * 0.01**2 / n)


def test_simulate_is_deterministic():
    cfg = benchmark_scenario()
    a = simulate(cfg, RngStream(5))
    b = simulate(cfg, RngStream(5))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_schedule_outside_horizon_rejected():
    with pytest.raises(ParameterError):
        benchmark_scenario(horizon=40)


def test_gamma_scale_states_stay_positive():
    cfg = benchmark_scenario(model=benchmark_model(Gamma(3, 2)))
    assert np.all(simulate(cfg, RngStream(0)).x > 0)


def test_csv_roundtrip(tmp_path):
    traj = simulate(benchmark_scenario(), RngStream(9))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    assert path.read_text().splitlines()[0] == "k,x_true,y,is_outlier"
    back = Trajectory.from_csv(path)
    assert np.array_equal(back.x, traj.x)
    assert np.array_equal(back.y, traj.y)
    assert np.array_equal(back.is_outlier, traj.is_outlier)
