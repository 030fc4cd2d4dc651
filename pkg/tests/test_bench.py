import numpy as np
import pytest

from ilapf import bench
from ilapf.filtering import FilterParams
from ilapf.noise import Gaussian, StudentT, Uniform


def test_desired_bounds():
    laws = bench.sweep_outlier_laws()
    assert bench.desired_bounds(laws["uniform"]) == (40, 50)
    assert bench.desired_bounds(laws["gaussian"]) == pytest.approx((42, 48))
    assert bench.desired_bounds(laws["student_t"]) == pytest.approx((42, 48))
    assert bench.desired_bounds(laws["mixture"]) == pytest.approx((42, 50))
    assert bench.desired_bounds(StudentT(3, 45, 1, unit_std=True)) == pytest.approx((42, 48))


def test_sweep_uniform_and_gaussian_examples():
    traces = bench.ore_sweep({"u": Uniform(40, 50), "g": Gaussian(45, 1)}, n_samples=300, seed=3)
    for tr in traces:
        lb, ub = tr.final_bounds
        if tr.distribution == "u" and tr.I == 10:
            assert abs(lb - 40) <= 0.5 and abs(ub - 50) <= 0.5
        if tr.distribution == "g":
            assert abs(lb - 42) <= 1.0 and abs(ub - 48) <= 1.0


def test_sweep_margin_ratio():
    traces = bench.ore_sweep({"u": Uniform(40, 50)}, I_values=(10, 100), n_samples=50, seed=0)
    small, large = traces
    lo = np.minimum.accumulate([r[1] for r in small.rows])
    for m, (n, _, lb_s, ub_s), (_, _, lb_l, ub_l) in zip(lo, small.rows, large.rows):
        assert (m - lb_l) / (m - lb_s) == pytest.approx(10.0, rel=1e-9)
        assert (ub_l - lb_l) - (ub_s - lb_s) == pytest.approx(2 * (100 - 10) / n)


def test_sweep_same_draws_for_every_I():
    traces = bench.ore_sweep(n_samples=20, seed=1)
    by_law = {}
    for tr in traces:
        by_law.setdefault(tr.distribution, []).append([r[1] for r in tr.rows])
    for zs in by_law.values():
        assert all(z == zs[0] for z in zs)


def test_sweep_light_tailed_traces_approach_reference():
    for tr in bench.ore_sweep(n_samples=300, seed=5):
        if tr.distribution == "student_t":
            continue
        dist = lambda row: abs(row[2] - tr.desired[0]) + abs(row[3] - tr.desired[1])  # noqa: E731
        assert dist(tr.rows[-1]) < dist(tr.rows[0])
        assert dist(tr.rows[-1]) < 1.5


def test_write_ore_sweep(tmp_path):
    bench.write_ore_sweep(bench.ore_sweep(I_values=(10,), n_samples=5), tmp_path)
    assert (tmp_path / "ore_uniform_I10.csv").read_text().startswith("n,z,lb_hat,ub_hat\n")
    assert len((tmp_path / "ore_desired_bounds.csv").read_text().splitlines()) == 5


def test_summary_variance_unbiased():
    s = bench.summarize([1.0, 2.0, 3.0, 4.0], [0.1] * 4)
    assert s.mse_mean == 2.5 and s.mse_var == pytest.approx(5 / 3)


def test_single_run_variance_zero_with_warning():
    with pytest.warns(RuntimeWarning):
        s = bench.summarize([0.4], [0.1])
    assert s.mse_var == 0.0
    with pytest.warns(RuntimeWarning):
        result = bench.mse_table(runs=1, seed=2, params=FilterParams(particles=50))
    assert result.summary.rows["ilapf"].mse_var == 0.0


def test_bench_rejects_zero_runs():
    with pytest.raises(ValueError):
        bench.mse_table(runs=0)


def test_bench_outputs_and_recompute(tmp_path):
    result = bench.mse_table(runs=4, seed=7, params=FilterParams(particles=100))
    bench.write_bench(result, tmp_path)
    recomputed = bench.summary_from_runs_csv(tmp_path / "runs.csv")
    assert recomputed.to_lines() == result.summary.to_lines()
    assert bench.read_summary(tmp_path / "summary.txt")["runs"] == "4"
    assert len(list((tmp_path / "runs").glob("*.csv"))) == 8


def test_fixed_trajectory_shares_truth():
    result = bench.mse_table(runs=3, seed=1, params=FilterParams(particles=50), fixed_trajectory=True)
    assert all(np.array_equal(m.x_true, result.ilapf[0].x_true) for m in result.ilapf)


def test_workers_do_not_change_results():
    params = FilterParams(particles=50)
    serial = bench.mse_table(runs=4, seed=9, params=params)
    parallel = bench.mse_table(runs=4, seed=9, params=params, workers=2)
    assert [m.mse for m in serial.ilapf] == [m.mse for m in parallel.ilapf]


def test_chain_of_one_equals_bench():
    params = FilterParams(particles=100)
    chain = bench.transfer_chain(tasks=1, runs=5, seed=4, params=params)
    table = bench.mse_table(runs=5, seed=4, params=params)
    assert [c[0].mse for c in chain.runs] == [m.mse for m in table.ilapf]
    assert chain.summaries[0].mse_mean == table.summary.rows["ilapf"].mse_mean


def test_chain_extrema_nested_across_tasks():
    chain = bench.transfer_chain(tasks=4, runs=5, seed=2, params=FilterParams(particles=100))
    for runs in chain.runs:
        for prev, nxt in zip(runs, runs[1:]):
            if prev.ore.n:
                assert nxt.ore.lo <= prev.ore.lo and nxt.ore.hi >= prev.ore.hi
            assert nxt.ore.n >= prev.ore.n


def test_write_transfer(tmp_path):
    chain = bench.transfer_chain(tasks=2, runs=2, seed=2, params=FilterParams(particles=50))
    bench.write_transfer(chain, tmp_path)
    summary = bench.read_summary(tmp_path / "summary.txt")
    assert summary["tasks"] == "2" and "task2.final_width_mean" in summary
    bounds = (tmp_path / "runs" / "bounds_r000.csv").read_text().splitlines()
    assert bounds[0] == "task,k,lb_hat,ub_hat" and len(bounds) == 121
