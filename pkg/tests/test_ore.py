import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilapf.noise import ParameterError
from ilapf.ore import OutlierRangeEstimator, format_record, parse_record, run_sequence

values = st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=60)


def test_initial_bounds_reported_before_any_outlier():
    assert OutlierRangeEstimator(0, 70, 20).bounds() == (0, 70)


def test_update_arithmetic():
    est = OutlierRangeEstimator(0, 70, 20)
    assert est.observe(25).bounds() == (5, 45)
    assert est.observe(28).bounds() == (15, 38)
    assert est.n == 2 and (est.lo, est.hi) == (25, 28)


def test_repeated_value_shrinks_to_point():
    est = OutlierRangeEstimator(0, 70, 10)
    for k in range(1, 51):
        est.observe(3.0)
        assert est.bounds() == (3.0 - 10 / k, 3.0 + 10 / k)


def test_uniform_convergence_example():
    gen = np.random.default_rng(2)
    rows = run_sequence(gen.uniform(40, 50, 200), 20, 70, 10)
    _, _, lb, ub = rows[-1]
    assert abs(lb - 40) <= 0.5 and abs(ub - 50) <= 0.5


@given(values, st.floats(-100, 100))
def test_shift_equivariance(zs, c):
    a = run_sequence(zs, 0, 70, 20)
    b = run_sequence([z + c for z in zs], 0, 70, 20)
    for (_, _, lb_a, ub_a), (_, _, lb_b, ub_b) in zip(a, b):
        assert lb_b == pytest.approx(lb_a + c, abs=1e-9)
        assert ub_b == pytest.approx(ub_a + c, abs=1e-9)


@given(values, st.floats(0.1, 200))
def test_bounds_cover_observations_with_shrinking_margin(zs, I):
    est = OutlierRangeEstimator(0, 70, I)
    seen = []
    prev_margin = math.inf
    for z in zs:
        est.observe(z)
        seen.append(z)
        lb, ub = est.bounds()
        assert lb < min(seen) <= max(seen) < ub
        assert lb == min(seen) - I / est.n and ub == max(seen) + I / est.n
        assert est.margin < prev_margin
        prev_margin = est.margin


def test_non_finite_rejected():
    est = OutlierRangeEstimator()
    with pytest.raises(ValueError):
        est.observe(float("nan"))
    with pytest.raises(ValueError):
        est.observe(float("inf"))


@pytest.mark.parametrize("kw", [dict(lb0=5, ub0=5), dict(I=0), dict(mode="median")])
def test_invalid_construction(kw):
    with pytest.raises(ParameterError):
        OutlierRangeEstimator(**kw)


def test_literal_single_step():
    est = OutlierRangeEstimator(20, 70, 10, mode="literal")
    assert est.observe(45).bounds() == (10, 80)


def test_literal_harmonic_divergence():
    est = OutlierRangeEstimator(20, 70, 10, mode="literal")
    for n in range(1, 11):
        est.observe(45)
        harmonic = sum(1.0 / j for j in range(1, n + 1))
        assert est.bounds()[0] == pytest.approx(20 - 10 * harmonic, abs=1e-12)
    assert est.bounds()[0] == pytest.approx(-9.28968253968253968253968253968, abs=1e-12)


def test_literal_and_extrema_modes_differ():
    a = OutlierRangeEstimator(20, 70, 10).observe(45).bounds()
    b = OutlierRangeEstimator(20, 70, 10, mode="literal").observe(45).bounds()
    assert a != b


def test_record_roundtrip():
    est = OutlierRangeEstimator(0, 70, 20)
    for z in (24.0, 21.5, 28.25):
        est.observe(z)
    rec = parse_record(format_record(est.to_record()))
    assert rec == est.to_record()
    back = OutlierRangeEstimator.from_record(rec, I=20)
    assert back.n == 3
    assert back.lo == pytest.approx(21.5) and back.hi == pytest.approx(28.25)
    assert back.observe(30.0).bounds() == pytest.approx(est.copy().observe(30.0).bounds())


def test_record_missing_key():
    with pytest.raises(ValueError):
        parse_record("lb_hat=1\nn=2\n")


def test_copy_is_independent():
    est = OutlierRangeEstimator(0, 70, 20).observe(25)
    twin = est.copy()
    twin.observe(40)
    assert est.n == 1 and twin.n == 2
